#include <algorithm>

#include "panseg/core/morphology.hpp"
#include "panseg/postprocess/postprocess.hpp"

namespace panseg::postprocess {

namespace {

template <typename T>
T per_class(const std::vector<T>& v, int cls) {
    return cls >= 0 && cls < static_cast<int>(v.size()) ? v[cls] : v.back();
}

} // namespace

InstanceMap filter_instances(const InstanceMap& inst, const std::vector<int>& classes,
                             const FilterConfig& cfg) {
    InstanceMap out = inst;
    if (!cfg.enabled) return out;
    int num_classes = 0;
    for (int c : classes) num_classes = std::max(num_classes, c + 1);
    cfg.validate(std::max(num_classes, static_cast<int>(cfg.min_area.size())));

    const int h = inst.height, w = inst.width;
    for (const Region& region : instance_regions(inst)) {
        require(region.label < static_cast<std::int32_t>(classes.size()), Errc::invalid_argument,
                "instance without a class");
        int cls = classes[region.label];

        // Hole-fill on the instance's padded bounding box; only pixels that
        // are background in the full map are claimed (holes occupied by
        // another instance stay put).
        int by0 = std::max(0, region.y0 - 1), bx0 = std::max(0, region.x0 - 1);
        int by1 = std::min(h - 1, region.y1 + 1), bx1 = std::min(w - 1, region.x1 + 1);
        int bh = by1 - by0 + 1, bw = bx1 - bx0 + 1;
        std::vector<std::uint8_t> mask(static_cast<std::size_t>(bh) * bw, 0);
        for (const Pixel& p : region.pixels)
            mask[static_cast<std::size_t>(p.y - by0) * bw + (p.x - bx0)] = 1;
        std::vector<std::uint8_t> filled = mask;
        fill_holes_mask(filled, bh, bw);

        long long area = 0;
        for (int yy = 0; yy < bh; ++yy)
            for (int xx = 0; xx < bw; ++xx) {
                std::size_t bi = static_cast<std::size_t>(yy) * bw + xx;
                if (!filled[bi]) continue;
                std::int32_t& cell = out.at(by0 + yy, bx0 + xx);
                if (!mask[bi]) {
                    if (cell == 0)
                        cell = region.label;
                    else if (cell != region.label)
                        continue; // hole owned by another instance
                }
                ++area;
            }

        bool keep = area >= per_class(cfg.min_area, cls) && area <= per_class(cfg.max_area, cls);
        if (keep && per_class(cfg.min_solidity, cls) > 0.0f) {
            // solidity on the post-fill mask
            std::vector<std::uint8_t> final_mask(static_cast<std::size_t>(bh) * bw, 0);
            for (int yy = 0; yy < bh; ++yy)
                for (int xx = 0; xx < bw; ++xx)
                    final_mask[static_cast<std::size_t>(yy) * bw + xx] =
                        out.at(by0 + yy, bx0 + xx) == region.label;
            keep = solidity_mask(final_mask, bh, bw) >=
                   static_cast<double>(per_class(cfg.min_solidity, cls));
        }
        if (!keep) {
            for (int yy = by0; yy <= by1; ++yy)
                for (int xx = bx0; xx <= bx1; ++xx)
                    if (out.at(yy, xx) == region.label) out.at(yy, xx) = 0;
        }
    }
    return out;
}

namespace {

// Compacts labels to 1..K in raster order of first pixel and maps the class
// list along.
void compact(InstanceMap& inst, std::vector<int>& classes) {
    std::vector<std::int32_t> remap(static_cast<std::size_t>(inst.max_label()) + 1, 0);
    std::int32_t next = 0;
    for (std::int32_t& v : inst.labels) {
        if (v <= 0) continue;
        if (remap[v] == 0) remap[v] = ++next;
        v = remap[v];
    }
    std::vector<int> new_classes(static_cast<std::size_t>(next) + 1, 0);
    for (std::size_t old = 1; old < remap.size(); ++old)
        if (remap[old] != 0 && old < classes.size()) new_classes[remap[old]] = classes[old];
    classes = std::move(new_classes);
}

} // namespace

PostprocessResult postprocess_image(const RasterF32& sem_probs, const RasterF32& tri_probs,
                                    const PostprocessConfig& cfg) {
    require(tri_probs.channels == 3, Errc::invalid_argument, "tri probs must have 3 planes");
    SemanticMap class_map = argmax_classes(sem_probs);
    RasterF32 p_interior = tri_probs.plane(1);
    RasterF32 p_boundary = tri_probs.plane(2);

    InstanceMap inst = watershed_instances(p_interior, p_boundary, class_map, cfg.watershed);
    if (cfg.split_cc) inst = split_disconnected(inst);

    // one class assignment feeds the class-specific filters and the output
    std::vector<int> classes = assign_classes(inst, sem_probs);
    inst = filter_instances(inst, classes, cfg.filter);

    PostprocessResult res;
    res.inst = std::move(inst);
    res.classes = std::move(classes);
    compact(res.inst, res.classes);
    return res;
}

} // namespace panseg::postprocess
