#include "panseg/metrics/metrics.hpp"

#include <algorithm>
#include <map>

namespace panseg::metrics {

void MatchStats::merge(const MatchStats& o) {
    require(num_classes == o.num_classes, Errc::invalid_argument, "class count mismatch");
    for (int c = 0; c < num_classes; ++c) {
        tp[c] += o.tp[c];
        fp[c] += o.fp[c];
        fn[c] += o.fn[c];
        sum_iou[c] += o.sum_iou[c];
    }
}

MatchResult match_instances(const InstanceMap& pred, const std::vector<int>& pred_classes,
                            const InstanceMap& gt, const std::vector<int>& gt_classes,
                            int num_classes) {
    require(pred.height == gt.height && pred.width == gt.width, Errc::invalid_argument,
            "pred/gt size mismatch");
    MatchResult res{MatchStats(num_classes), {}};

    // single pass: per-label areas and pairwise intersections
    std::vector<long long> pred_area(static_cast<std::size_t>(pred.max_label()) + 1, 0);
    std::vector<long long> gt_area(static_cast<std::size_t>(gt.max_label()) + 1, 0);
    std::map<std::pair<std::int32_t, std::int32_t>, long long> inter;
    for (std::size_t i = 0; i < pred.labels.size(); ++i) {
        std::int32_t p = pred.labels[i], g = gt.labels[i];
        if (p > 0) ++pred_area[p];
        if (g > 0) ++gt_area[g];
        if (p > 0 && g > 0) ++inter[{g, p}];
    }

    auto class_of = [num_classes](const std::vector<int>& classes, std::int32_t label) {
        int c = label < static_cast<std::int32_t>(classes.size()) ? classes[label] : 0;
        require(c >= 0 && c < num_classes, Errc::invalid_argument, "class index out of range");
        return c;
    };

    // IoU > 0.5 admits at most one partner per instance, so collecting
    // qualifying pairs directly yields the unique matching.
    std::vector<std::uint8_t> gt_matched(gt_area.size(), 0), pred_matched(pred_area.size(), 0);
    for (const auto& [key, overlap] : inter) {
        auto [g, p] = key;
        int cg = class_of(gt_classes, g);
        int cp = class_of(pred_classes, p);
        if (cg != cp || cg == 0) continue;
        double iou = static_cast<double>(overlap) /
                     static_cast<double>(gt_area[g] + pred_area[p] - overlap);
        if (iou > 0.5) {
            gt_matched[g] = 1;
            pred_matched[p] = 1;
            res.stats.tp[cg] += 1;
            res.stats.sum_iou[cg] += iou;
            res.pairs.push_back({cg, p, g, iou});
        }
    }
    for (std::size_t g = 1; g < gt_area.size(); ++g)
        if (gt_area[g] > 0 && !gt_matched[g]) res.stats.fn[class_of(gt_classes, g)] += 1;
    for (std::size_t p = 1; p < pred_area.size(); ++p)
        if (pred_area[p] > 0 && !pred_matched[p]) res.stats.fp[class_of(pred_classes, p)] += 1;
    return res;
}

PqReport pq_plus(const MatchStats& stats) {
    PqReport rep;
    rep.per_class.assign(static_cast<std::size_t>(stats.num_classes), 0.0);
    double total = 0.0;
    int counted = 0;
    for (int c = 1; c < stats.num_classes; ++c) {
        double denom = static_cast<double>(stats.tp[c]) +
                       0.5 * static_cast<double>(stats.fp[c]) +
                       0.5 * static_cast<double>(stats.fn[c]);
        rep.per_class[c] = denom > 0.0 ? stats.sum_iou[c] / denom : 0.0;
        total += rep.per_class[c];
        ++counted;
    }
    rep.mpq = counted > 0 ? total / counted : 0.0;
    return rep;
}

CountTable make_count_table(int num_images, int num_classes) {
    CountTable t;
    t.num_images = num_images;
    t.num_classes = num_classes;
    t.true_counts.assign(static_cast<std::size_t>(num_images) * num_classes, 0);
    t.pred_counts.assign(static_cast<std::size_t>(num_images) * num_classes, 0);
    return t;
}

R2Report r_squared(const CountTable& counts) {
    require(counts.num_images >= 2, Errc::invalid_argument, "R^2 needs at least two images");
    R2Report rep;
    rep.per_class.assign(static_cast<std::size_t>(counts.num_classes), 0.0);
    double total = 0.0;
    int counted = 0;
    for (int c = 1; c < counts.num_classes; ++c) {
        double mean = 0.0;
        for (int n = 0; n < counts.num_images; ++n) mean += static_cast<double>(counts.true_at(n, c));
        mean /= counts.num_images;
        double ss_res = 0.0, ss_tot = 0.0;
        for (int n = 0; n < counts.num_images; ++n) {
            double err = static_cast<double>(counts.pred_at(n, c)) -
                         static_cast<double>(counts.true_at(n, c));
            double dev = static_cast<double>(counts.true_at(n, c)) - mean;
            ss_res += err * err;
            ss_tot += dev * dev;
        }
        double r2;
        if (ss_tot == 0.0)
            r2 = ss_res == 0.0 ? 1.0 : 0.0;
        else
            r2 = 1.0 - ss_res / ss_tot;
        rep.per_class[c] = r2;
        total += r2;
        ++counted;
    }
    rep.mean = counted > 0 ? total / counted : 0.0;
    return rep;
}

std::vector<long long> count_with_crop(const InstanceMap& inst, const std::vector<int>& classes,
                                       int crop, int num_classes) {
    std::vector<long long> counts(static_cast<std::size_t>(num_classes), 0);
    int y0 = 0, x0 = 0, y1 = inst.height, x1 = inst.width;
    if (crop > 0) {
        require(crop <= inst.height && crop <= inst.width, Errc::invalid_argument,
                "crop exceeds image size");
        y0 = (inst.height - crop) / 2;
        x0 = (inst.width - crop) / 2;
        y1 = y0 + crop;
        x1 = x0 + crop;
    }
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(inst.max_label()) + 1, 0);
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            std::int32_t l = inst.at(y, x);
            if (l <= 0 || seen[l]) continue;
            seen[l] = 1;
            int c = l < static_cast<std::int32_t>(classes.size()) ? classes[l] : 0;
            if (c > 0 && c < num_classes) ++counts[c];
        }
    return counts;
}

std::vector<int> classes_from_semantic(const InstanceMap& inst, const SemanticMap& sem,
                                       int num_classes) {
    std::int32_t max_label = inst.max_label();
    std::vector<long long> votes(static_cast<std::size_t>(max_label + 1) * num_classes, 0);
    for (std::size_t i = 0; i < inst.labels.size(); ++i) {
        std::int32_t l = inst.labels[i];
        if (l <= 0) continue;
        int c = sem.classes[i];
        if (c < num_classes) ++votes[static_cast<std::size_t>(l) * num_classes + c];
    }
    std::vector<int> classes(static_cast<std::size_t>(max_label + 1), 0);
    for (std::int32_t l = 1; l <= max_label; ++l) {
        const long long* v = votes.data() + static_cast<std::size_t>(l) * num_classes;
        int best = 1;
        for (int c = 2; c < num_classes; ++c)
            if (v[c] > v[best]) best = c;
        classes[l] = best;
    }
    return classes;
}

} // namespace panseg::metrics
