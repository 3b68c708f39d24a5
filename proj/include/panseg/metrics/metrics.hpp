#pragma once

#include <vector>

#include "panseg/core/raster.hpp"

namespace panseg::metrics {

// Dataset-aggregated match statistics per class (background excluded from
// reporting but the vectors are indexed by class, entry 0 unused).
struct MatchStats {
    int num_classes = 0;
    std::vector<long long> tp, fp, fn;
    std::vector<double> sum_iou;

    explicit MatchStats(int classes = 0)
        : num_classes(classes), tp(classes, 0), fp(classes, 0), fn(classes, 0),
          sum_iou(classes, 0.0) {}

    void merge(const MatchStats& o);
};

struct MatchedPair {
    int cls = 0;
    std::int32_t pred_label = 0;
    std::int32_t gt_label = 0;
    double iou = 0.0;
};

struct MatchResult {
    MatchStats stats;
    std::vector<MatchedPair> pairs;
};

// Class-wise matching at IoU > 0.5 (which makes the matching unique).
// Classes come from the per-label class lists; a correct mask with the wrong
// class counts as FP for the predicted class and FN for the true class.
MatchResult match_instances(const InstanceMap& pred, const std::vector<int>& pred_classes,
                            const InstanceMap& gt, const std::vector<int>& gt_classes,
                            int num_classes);

struct PqReport {
    std::vector<double> per_class; // indexed by class, entry 0 unused
    double mpq = 0.0;              // mean over non-background classes
};

// PQ+(c) = sum_iou / (TP + FP/2 + FN/2) on dataset-aggregated stats; a class
// with zero denominator contributes 0.
PqReport pq_plus(const MatchStats& stats);

// Per-image per-class instance counts (background excluded).
struct CountTable {
    int num_images = 0;
    int num_classes = 0;
    std::vector<long long> true_counts; // [image][class]
    std::vector<long long> pred_counts;

    long long& true_at(int n, int c) {
        return true_counts[static_cast<std::size_t>(n) * num_classes + c];
    }
    long long& pred_at(int n, int c) {
        return pred_counts[static_cast<std::size_t>(n) * num_classes + c];
    }
    long long true_at(int n, int c) const {
        return true_counts[static_cast<std::size_t>(n) * num_classes + c];
    }
    long long pred_at(int n, int c) const {
        return pred_counts[static_cast<std::size_t>(n) * num_classes + c];
    }
};

CountTable make_count_table(int num_images, int num_classes);

struct R2Report {
    std::vector<double> per_class; // entry 0 unused
    double mean = 0.0;
};

// R^2 = 1 - SS_res/SS_tot per class over images. A zero-variance class scores
// 1 with zero residuals and 0 otherwise. Needs >= 2 images.
R2Report r_squared(const CountTable& counts);

// Counts each instance for its class iff it has at least one pixel inside the
// centered crop window; crop <= 0 counts on the full image.
std::vector<long long> count_with_crop(const InstanceMap& inst, const std::vector<int>& classes,
                                       int crop, int num_classes);

// Ground-truth instance classes from a semantic map (majority vote over the
// instance's pixels; synthetic instances are single-class by construction).
std::vector<int> classes_from_semantic(const InstanceMap& inst, const SemanticMap& sem,
                                       int num_classes);

} // namespace panseg::metrics
