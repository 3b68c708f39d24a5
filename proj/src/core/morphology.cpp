#include "panseg/core/morphology.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>

namespace panseg {

namespace {

std::vector<std::uint8_t> to_mask(const RasterF32& plane) {
    if (plane.channels != 1)
        fail(Errc::invalid_argument, "binary operation expects a single-channel plane");
    std::vector<std::uint8_t> mask(plane.pixel_count());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        float v = plane.data[i];
        if (v != 0.0f && v != 1.0f)
            fail(Errc::invalid_argument, "plane is not binary (values must be 0 or 1)");
        mask[i] = v != 0.0f;
    }
    return mask;
}

// Union-find with path halving.
struct UnionFind {
    std::vector<std::int32_t> parent;
    std::int32_t make() {
        parent.push_back(static_cast<std::int32_t>(parent.size()));
        return parent.back();
    }
    std::int32_t find(std::int32_t a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    void unite(std::int32_t a, std::int32_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

} // namespace

InstanceMap connected_components_mask(const std::vector<std::uint8_t>& mask, int height,
                                      int width, int connectivity) {
    if (connectivity != 4 && connectivity != 8)
        fail(Errc::invalid_argument, "connectivity must be 4 or 8");
    InstanceMap out(height, width);
    if (height == 0 || width == 0) return out;

    // Two-pass labeling: provisional labels + union-find, then a relabel that
    // numbers components by the raster position of their first pixel.
    UnionFind uf;
    uf.make(); // 0 = background sentinel
    std::vector<std::int32_t> prov(static_cast<std::size_t>(height) * width, 0);

    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            std::size_t idx = static_cast<std::size_t>(y) * width + x;
            if (!mask[idx]) continue;
            std::int32_t left = x > 0 ? prov[idx - 1] : 0;
            std::int32_t up = y > 0 ? prov[idx - width] : 0;
            std::int32_t upleft = (connectivity == 8 && y > 0 && x > 0) ? prov[idx - width - 1] : 0;
            std::int32_t upright =
                (connectivity == 8 && y > 0 && x < width - 1) ? prov[idx - width + 1] : 0;

            std::int32_t label = 0;
            for (std::int32_t nb : {left, up, upleft, upright}) {
                if (nb == 0) continue;
                if (label == 0)
                    label = nb;
                else
                    uf.unite(label, nb);
            }
            if (label == 0) label = uf.make();
            prov[idx] = label;
        }
    }

    std::vector<std::int32_t> remap(uf.parent.size(), 0);
    std::int32_t next = 0;
    for (std::size_t i = 0; i < prov.size(); ++i) {
        if (prov[i] == 0) continue;
        std::int32_t root = uf.find(prov[i]);
        if (remap[root] == 0) remap[root] = ++next;
        out.labels[i] = remap[root];
    }
    return out;
}

InstanceMap connected_components(const RasterF32& binary_plane, int connectivity) {
    return connected_components_mask(to_mask(binary_plane), binary_plane.height,
                                     binary_plane.width, connectivity);
}

void fill_holes_mask(std::vector<std::uint8_t>& mask, int height, int width) {
    if (height == 0 || width == 0) return;
    std::vector<std::uint8_t> outside(mask.size(), 0);
    std::vector<std::int32_t> stack;
    auto push = [&](int y, int x) {
        std::size_t idx = static_cast<std::size_t>(y) * width + x;
        if (!mask[idx] && !outside[idx]) {
            outside[idx] = 1;
            stack.push_back(static_cast<std::int32_t>(idx));
        }
    };
    for (int x = 0; x < width; ++x) {
        push(0, x);
        push(height - 1, x);
    }
    for (int y = 0; y < height; ++y) {
        push(y, 0);
        push(y, width - 1);
    }
    while (!stack.empty()) {
        std::int32_t idx = stack.back();
        stack.pop_back();
        int y = idx / width, x = idx % width;
        if (y > 0) push(y - 1, x);
        if (y < height - 1) push(y + 1, x);
        if (x > 0) push(y, x - 1);
        if (x < width - 1) push(y, x + 1);
    }
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (!mask[i] && !outside[i]) mask[i] = 1;
}

RasterF32 fill_holes(const RasterF32& binary_plane) {
    auto mask = to_mask(binary_plane);
    fill_holes_mask(mask, binary_plane.height, binary_plane.width);
    RasterF32 out(binary_plane.height, binary_plane.width, 1);
    for (std::size_t i = 0; i < mask.size(); ++i) out.data[i] = mask[i] ? 1.0f : 0.0f;
    return out;
}

std::vector<Point2i> convex_hull(std::vector<Point2i> pts) {
    std::sort(pts.begin(), pts.end(), [](const Point2i& a, const Point2i& b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Point2i& a, const Point2i& b) {
                              return a.x == b.x && a.y == b.y;
                          }),
              pts.end());
    std::size_t n = pts.size();
    if (n < 3) return pts;

    auto cross = [](const Point2i& o, const Point2i& a, const Point2i& b) {
        return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    };
    std::vector<Point2i> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) { // lower
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = n - 1, t = k + 1; i-- > 0;) { // upper
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

double polygon_area(const std::vector<Point2i>& poly) {
    if (poly.size() < 3) return 0.0;
    long long twice = 0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point2i& a = poly[i];
        const Point2i& b = poly[(i + 1) % poly.size()];
        twice += a.x * b.y - b.x * a.y;
    }
    return std::abs(static_cast<double>(twice)) / 2.0;
}

double solidity_mask(const std::vector<std::uint8_t>& mask, int height, int width) {
    std::vector<Point2i> corners;
    long long area = 0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            if (!mask[static_cast<std::size_t>(y) * width + x]) continue;
            ++area;
            corners.push_back({x, y});
            corners.push_back({x + 1, y});
            corners.push_back({x, y + 1});
            corners.push_back({x + 1, y + 1});
        }
    }
    if (area == 0) fail(Errc::invalid_argument, "solidity of an empty mask is undefined");
    double hull_area = polygon_area(convex_hull(std::move(corners)));
    // hull covers the pixel union, so hull_area >= area
    return static_cast<double>(area) / hull_area;
}

double solidity(const RasterF32& binary_plane) {
    return solidity_mask(to_mask(binary_plane), binary_plane.height, binary_plane.width);
}

std::vector<Region> instance_regions(const InstanceMap& inst) {
    std::int32_t max_label = inst.max_label();
    if (max_label == 0) return {};
    std::vector<std::int32_t> slot(static_cast<std::size_t>(max_label) + 1, -1);
    std::vector<Region> regions;
    for (int y = 0; y < inst.height; ++y) {
        for (int x = 0; x < inst.width; ++x) {
            std::int32_t v = inst.at(y, x);
            if (v <= 0) continue;
            std::int32_t& s = slot[v];
            if (s < 0) {
                s = static_cast<std::int32_t>(regions.size());
                regions.push_back(Region{v, {}, y, x, y, x});
            }
            Region& r = regions[s];
            r.pixels.push_back({y, x});
            r.y0 = std::min(r.y0, y);
            r.x0 = std::min(r.x0, x);
            r.y1 = std::max(r.y1, y);
            r.x1 = std::max(r.x1, x);
        }
    }
    std::sort(regions.begin(), regions.end(),
              [](const Region& a, const Region& b) { return a.label < b.label; });
    return regions;
}

} // namespace panseg
