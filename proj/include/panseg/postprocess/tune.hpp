#pragma once

#include <string>

#include "panseg/metrics/metrics.hpp"
#include "panseg/postprocess/postprocess.hpp"

namespace panseg::postprocess {

struct ValImage {
    RasterF32 sem_probs;
    RasterF32 tri_probs;
    InstanceMap gt_inst;
    std::vector<int> gt_classes;
};

enum class ObjectiveKind { mpq, r2 };

struct Objective {
    ObjectiveKind kind = ObjectiveKind::mpq;
    int count_crop = 0; // crop used for R^2 counting; 0 = full image
    int num_classes = 7;
};

// Runs the full post-processing chain over the validation set and scores it.
double evaluate_config(const PostprocessConfig& cfg, const std::vector<ValImage>& val,
                       const Objective& objective, int threads = 0);

struct TuneEntry {
    std::size_t index = 0;
    double score = 0.0;
};

struct TuneResult {
    PostprocessConfig best;
    std::size_t best_index = 0;
    double best_score = 0.0;
    std::vector<TuneEntry> table;
};

// Exhaustive search over an explicit candidate list; ties break to the first
// candidate in list order.
TuneResult grid_search(const std::vector<PostprocessConfig>& candidates,
                       const std::vector<ValImage>& val, const Objective& objective,
                       int threads = 0);

// Axis grids for the coordinate-wise tuner.
struct TuneGrids {
    std::vector<float> seed_thresholds;
    std::vector<float> fg_thresholds;
    std::vector<int> min_areas;
    std::vector<int> max_areas;
    std::vector<float> min_solidities;
    int sweeps = 1;
    bool per_class = true; // tune each class's entry separately
};

// Coordinate-wise relaxation of the joint grid: sweeps every (parameter,
// class) axis in a fixed order, keeping the best value per axis. Returns the
// incumbent config and the full score trace.
TuneResult tune_coordinatewise(const PostprocessConfig& base, const TuneGrids& grids,
                               const std::vector<ValImage>& val, const Objective& objective,
                               int threads = 0);

} // namespace panseg::postprocess
