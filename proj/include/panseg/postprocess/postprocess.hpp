#pragma once

#include <vector>

#include "panseg/core/raster.hpp"

namespace panseg::postprocess {

// Per-class thresholds, indexed by semantic class (entry 0 = background
// class, used where the semantic argmax is background).
struct WatershedConfig {
    std::vector<float> seed_threshold; // t_seed(c), in (0,1)
    std::vector<float> fg_threshold;   // t_fg(c), in (0,1); t_seed >= t_fg
    int min_seed_area = 2;             // seeds smaller than this are dropped

    void validate(int num_classes) const;
};

struct FilterConfig {
    bool enabled = true;
    std::vector<int> min_area;       // instances strictly below are removed
    std::vector<int> max_area;       // instances strictly above are removed
    std::vector<float> min_solidity; // instances strictly below are removed

    void validate(int num_classes) const;
};

// Seeded watershed on -p_interior restricted to the thresholded foreground.
// Seeds are 8-connected components of {p_interior >= t_seed(class_map)};
// foreground is {p_interior + p_boundary >= t_fg(class_map)}. The flood uses
// a priority queue ordered by (elevation, insertion sequence) so output is
// bit-deterministic. Unseeded foreground stays background.
InstanceMap watershed_instances(const RasterF32& p_interior, const RasterF32& p_boundary,
                                const SemanticMap& class_map, const WatershedConfig& cfg);

// Relabels so every instance is 8-connected; label order is raster-scan of
// each component's first pixel.
InstanceMap split_disconnected(const InstanceMap& inst);

// class(i) = argmax over non-background classes of the summed per-pixel
// softmax scores; ties break to the lowest class index. Indexed by label
// (entry 0 unused).
std::vector<int> assign_classes(const InstanceMap& inst, const RasterF32& sem_probs);

// Hole-fill each instance (without stealing other instances' pixels), then
// apply per-class area and solidity filters in that order. Removed instances
// become background; surviving labels are compacted in raster order.
InstanceMap filter_instances(const InstanceMap& inst, const std::vector<int>& classes,
                             const FilterConfig& cfg);

struct PostprocessConfig {
    WatershedConfig watershed;
    FilterConfig filter;
    bool split_cc = true;
};

struct PostprocessResult {
    InstanceMap inst;
    std::vector<int> classes; // indexed by label, entry 0 unused
};

// Full chain: watershed -> CC split -> class assignment -> filtering.
PostprocessResult postprocess_image(const RasterF32& sem_probs, const RasterF32& tri_probs,
                                    const PostprocessConfig& cfg);

// Semantic argmax helper (lowest index wins ties).
SemanticMap argmax_classes(const RasterF32& sem_probs);

} // namespace panseg::postprocess
