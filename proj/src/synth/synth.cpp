#include "panseg/synth/synth.hpp"

#include <algorithm>
#include <cmath>

#include "panseg/core/morphology.hpp"
#include "panseg/core/rng.hpp"

namespace panseg::synth {

SceneConfig SceneConfig::lizard_like() {
    SceneConfig cfg;
    cfg.classes.resize(7);
    // Stain signatures are spread in hue direction (not just intensity) so
    // classes stay separable under the radial depth modulation.
    cfg.classes[1] = {0.0089, 80.78, 41.71, {0.05f, 0.05f, 0.85f}};  // neutrophil
    cfg.classes[2] = {0.4950, 119.29, 72.82, {0.50f, 0.25f, 0.00f}}; // epithelial
    cfg.classes[3] = {0.2122, 50.06, 19.60, {1.25f, 0.03f, 0.00f}};  // lymphocyte
    cfg.classes[4] = {0.0561, 56.30, 22.86, {0.70f, 0.70f, 0.00f}};  // plasma
    cfg.classes[5] = {0.0068, 87.97, 45.91, {0.15f, 1.10f, 0.00f}};  // eosinophil
    cfg.classes[6] = {0.2210, 79.86, 49.54, {0.30f, 0.12f, 0.45f}};  // connective
    return cfg;
}

namespace {

struct Placement {
    int cls = 0;
    double area = 0.0;
};

struct Ellipse {
    double cy, cx, semi_major, semi_minor, cos_t, sin_t;
    bool notch;

    bool contains(double y, double x) const {
        double ry = y - cy, rx = x - cx;
        double u = rx * cos_t + ry * sin_t;
        double v = -rx * sin_t + ry * cos_t;
        double q = (u * u) / (semi_major * semi_major) + (v * v) / (semi_minor * semi_minor);
        if (q > 1.0) return false;
        if (notch && u > 0.1 * semi_major && std::abs(v) < 0.35 * semi_minor) return false;
        return true;
    }
};

bool mask_is_connected8(const std::vector<Pixel>& pixels) {
    if (pixels.empty()) return false;
    int y0 = pixels[0].y, y1 = pixels[0].y, x0 = pixels[0].x, x1 = pixels[0].x;
    for (const Pixel& p : pixels) {
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
    }
    int bh = y1 - y0 + 1, bw = x1 - x0 + 1;
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(bh) * bw, 0);
    for (const Pixel& p : pixels)
        mask[static_cast<std::size_t>(p.y - y0) * bw + (p.x - x0)] = 1;
    InstanceMap cc = connected_components_mask(mask, bh, bw, 8);
    return cc.max_label() == 1;
}

} // namespace

Scene generate(const SceneConfig& cfg, std::uint64_t seed) {
    require(cfg.height > 0 && cfg.width > 0, Errc::invalid_argument, "empty tile");
    require(cfg.classes.size() >= 2, Errc::invalid_argument, "need at least one nucleus class");
    const int C = static_cast<int>(cfg.classes.size());

    double freq_total = 0.0, mean_area = 0.0;
    for (int c = 1; c < C; ++c) {
        require(cfg.classes[c].frequency >= 0.0, Errc::invalid_argument, "negative frequency");
        freq_total += cfg.classes[c].frequency;
    }
    require(freq_total > 0.0, Errc::invalid_argument, "all class frequencies are zero");
    for (int c = 1; c < C; ++c)
        mean_area += cfg.classes[c].frequency / freq_total * cfg.classes[c].mean_area;

    Pcg32 rng(seed, /*stream=*/0x9c3e);
    Scene scene;
    scene.image = RasterF32(cfg.height, cfg.width, 3);
    scene.inst = InstanceMap(cfg.height, cfg.width);
    scene.sem = SemanticMap(cfg.height, cfg.width);
    scene.counts.assign(static_cast<std::size_t>(C), 0);

    const double tile_px = static_cast<double>(cfg.height) * cfg.width;
    const int n_target =
        cfg.density <= 0.0 ? 0 : static_cast<int>(std::lround(cfg.density * tile_px / mean_area));

    // Class list drawn up front (multinomial), then placed largest-first so
    // the empirical class shares track the configured frequencies.
    std::vector<Placement> placements(static_cast<std::size_t>(n_target));
    for (Placement& pl : placements) {
        double u = rng.uniform01() * freq_total;
        int cls = 1;
        for (int c = 1; c < C; ++c) {
            u -= cfg.classes[c].frequency;
            if (u < 0.0) {
                cls = c;
                break;
            }
            cls = c;
        }
        pl.cls = cls;
        double area = cfg.classes[cls].mean_area + cfg.classes[cls].std_area * rng.normal();
        pl.area = std::max(9.0, area);
    }
    std::stable_sort(placements.begin(), placements.end(),
                     [](const Placement& a, const Placement& b) { return a.area > b.area; });

    // occupancy with the configured gap dilated in, so instances keep min_gap
    std::vector<std::uint8_t> blocked(scene.inst.labels.size(), 0);
    std::vector<Pixel> pixels;
    std::int32_t next_label = 0;
    const int gap = static_cast<int>(std::ceil(cfg.min_gap));

    struct Rendered {
        std::int32_t label;
        int cls;
        Ellipse shape;
    };
    std::vector<Rendered> rendered;

    for (const Placement& pl : placements) {
        bool placed = false;
        for (int attempt = 0; attempt < cfg.max_attempts_per_instance && !placed; ++attempt) {
            double ratio = rng.uniform(0.55, 1.0);
            double semi_major = std::sqrt(pl.area / (3.14159265358979323846 * ratio));
            double semi_minor = ratio * semi_major;
            double theta = rng.uniform(0.0, 3.14159265358979323846);
            Ellipse e{rng.uniform(1.0, cfg.height - 2.0),
                      rng.uniform(1.0, cfg.width - 2.0),
                      semi_major,
                      semi_minor,
                      std::cos(theta),
                      std::sin(theta),
                      cfg.notch_probability > 0.0 && rng.chance(cfg.notch_probability)};

            int y0 = std::max(0, static_cast<int>(std::floor(e.cy - semi_major - 1)));
            int y1 = std::min(cfg.height - 1, static_cast<int>(std::ceil(e.cy + semi_major + 1)));
            int x0 = std::max(0, static_cast<int>(std::floor(e.cx - semi_major - 1)));
            int x1 = std::min(cfg.width - 1, static_cast<int>(std::ceil(e.cx + semi_major + 1)));

            pixels.clear();
            bool collides = false;
            for (int y = y0; y <= y1 && !collides; ++y)
                for (int x = x0; x <= x1; ++x) {
                    if (!e.contains(y + 0.5, x + 0.5)) continue;
                    if (blocked[static_cast<std::size_t>(y) * cfg.width + x]) {
                        collides = true;
                        break;
                    }
                    pixels.push_back({y, x});
                }
            if (collides || pixels.size() < 4 || !mask_is_connected8(pixels)) continue;

            std::int32_t label = ++next_label;
            for (const Pixel& p : pixels) {
                scene.inst.at(p.y, p.x) = label;
                scene.sem.at(p.y, p.x) = static_cast<std::uint8_t>(pl.cls);
                for (int gy = -gap; gy <= gap; ++gy)
                    for (int gx = -gap; gx <= gap; ++gx) {
                        int by = p.y + gy, bx = p.x + gx;
                        if (by >= 0 && by < cfg.height && bx >= 0 && bx < cfg.width)
                            blocked[static_cast<std::size_t>(by) * cfg.width + bx] = 1;
                    }
            }
            scene.counts[pl.cls] += 1;
            rendered.push_back({label, pl.cls, e});
            placed = true;
        }
        if (!placed)
            fail(Errc::invalid_argument,
                 "synth: density infeasible, could not place an instance of area " +
                     std::to_string(pl.area) + " after " +
                     std::to_string(cfg.max_attempts_per_instance) + " attempts");
    }

    // Render in HED space: pale eosin background with mild texture, nuclei
    // with class stain signatures and a darker center, then one pass to RGB.
    RasterF32 hed(cfg.height, cfg.width, 3);
    for (std::size_t p = 0; p < hed.pixel_count(); ++p) {
        hed.data[p * 3 + 0] = 0.04f + 0.01f * static_cast<float>(rng.normal());
        hed.data[p * 3 + 1] = 0.18f + 0.02f * static_cast<float>(rng.normal());
        hed.data[p * 3 + 2] = 0.0f;
    }
    for (const Rendered& r : rendered) {
        const ClassProfile& prof = cfg.classes[r.cls];
        float jitter = 1.0f + 0.05f * static_cast<float>(rng.normal());
        int y0 = std::max(0, static_cast<int>(std::floor(r.shape.cy - r.shape.semi_major - 1)));
        int y1 = std::min(cfg.height - 1,
                          static_cast<int>(std::ceil(r.shape.cy + r.shape.semi_major + 1)));
        int x0 = std::max(0, static_cast<int>(std::floor(r.shape.cx - r.shape.semi_major - 1)));
        int x1 = std::min(cfg.width - 1,
                          static_cast<int>(std::ceil(r.shape.cx + r.shape.semi_major + 1)));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                if (scene.inst.at(y, x) != r.label) continue;
                double ry = y + 0.5 - r.shape.cy, rx = x + 0.5 - r.shape.cx;
                double u = rx * r.shape.cos_t + ry * r.shape.sin_t;
                double v = -rx * r.shape.sin_t + ry * r.shape.cos_t;
                double rad = std::sqrt((u * u) / (r.shape.semi_major * r.shape.semi_major) +
                                       (v * v) / (r.shape.semi_minor * r.shape.semi_minor));
                float depth = 1.0f + 0.2f * (1.0f - static_cast<float>(std::min(rad, 1.0)));
                float* px = &hed.data[(static_cast<std::size_t>(y) * cfg.width + x) * 3];
                for (int k = 0; k < 3; ++k) {
                    float noise = 1.0f + 0.02f * static_cast<float>(rng.normal());
                    px[k] = prof.hed[k] * jitter * depth * noise;
                }
            }
    }
    scene.image = augment::hed_to_rgb(hed, cfg.basis);
    return scene;
}

} // namespace panseg::synth
