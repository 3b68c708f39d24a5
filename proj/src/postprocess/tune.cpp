#include "panseg/postprocess/tune.hpp"

#include <algorithm>

#include "panseg/core/parallel.hpp"

namespace panseg::postprocess {

double evaluate_config(const PostprocessConfig& cfg, const std::vector<ValImage>& val,
                       const Objective& objective, int threads) {
    require(!val.empty(), Errc::invalid_argument, "validation set is empty");
    const int C = objective.num_classes;

    std::vector<PostprocessResult> results(val.size());
    parallel_for(val.size(), threads, [&](std::size_t i) {
        results[i] = postprocess_image(val[i].sem_probs, val[i].tri_probs, cfg);
    });

    if (objective.kind == ObjectiveKind::mpq) {
        metrics::MatchStats stats(C);
        for (std::size_t i = 0; i < val.size(); ++i) {
            metrics::MatchResult m = metrics::match_instances(
                results[i].inst, results[i].classes, val[i].gt_inst, val[i].gt_classes, C);
            stats.merge(m.stats);
        }
        return metrics::pq_plus(stats).mpq;
    }

    metrics::CountTable table = metrics::make_count_table(static_cast<int>(val.size()), C);
    for (std::size_t i = 0; i < val.size(); ++i) {
        auto pred = metrics::count_with_crop(results[i].inst, results[i].classes,
                                             objective.count_crop, C);
        auto truth = metrics::count_with_crop(val[i].gt_inst, val[i].gt_classes,
                                              objective.count_crop, C);
        for (int c = 0; c < C; ++c) {
            table.pred_at(static_cast<int>(i), c) = pred[c];
            table.true_at(static_cast<int>(i), c) = truth[c];
        }
    }
    return metrics::r_squared(table).mean;
}

TuneResult grid_search(const std::vector<PostprocessConfig>& candidates,
                       const std::vector<ValImage>& val, const Objective& objective,
                       int threads) {
    require(!candidates.empty(), Errc::invalid_argument, "candidate grid is empty");
    require(!val.empty(), Errc::invalid_argument, "validation set is empty");

    TuneResult res;
    res.table.resize(candidates.size());
    // candidates evaluated independently; images parallelize inside
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        res.table[i].index = i;
        res.table[i].score = evaluate_config(candidates[i], val, objective, threads);
    }
    res.best_index = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i)
        if (res.table[i].score > res.table[res.best_index].score) res.best_index = i;
    res.best = candidates[res.best_index];
    res.best_score = res.table[res.best_index].score;
    return res;
}

namespace {

template <typename T>
void broadcast(std::vector<T>& v, int num_classes) {
    if (static_cast<int>(v.size()) == num_classes) return;
    require(v.size() == 1, Errc::config, "threshold list must have 1 or num_classes entries");
    v.assign(static_cast<std::size_t>(num_classes), v[0]);
}

} // namespace

TuneResult tune_coordinatewise(const PostprocessConfig& base, const TuneGrids& grids,
                               const std::vector<ValImage>& val, const Objective& objective,
                               int threads) {
    const int C = objective.num_classes;
    PostprocessConfig current = base;
    broadcast(current.watershed.seed_threshold, C);
    broadcast(current.watershed.fg_threshold, C);
    broadcast(current.filter.min_area, C);
    broadcast(current.filter.max_area, C);
    broadcast(current.filter.min_solidity, C);

    TuneResult res;
    res.best = current;
    res.best_score = evaluate_config(current, val, objective, threads);
    res.table.push_back({0, res.best_score});

    // one scan over the candidate values of a single (parameter, class) slot
    auto scan = [&](auto&& setter, const auto& values) {
        if (values.empty()) return;
        for (const auto& v : values) {
            PostprocessConfig candidate = res.best;
            if (!setter(candidate, v)) continue; // invariant-violating value
            double score = evaluate_config(candidate, val, objective, threads);
            res.table.push_back({res.table.size(), score});
            if (score > res.best_score) {
                res.best_score = score;
                res.best = candidate;
            }
        }
    };

    const int first_class = grids.per_class ? 1 : 0;
    for (int sweep = 0; sweep < std::max(1, grids.sweeps); ++sweep) {
        for (int c = first_class; c < (grids.per_class ? C : 1); ++c) {
            scan(
                [&](PostprocessConfig& cfg, float v) {
                    auto& ws = cfg.watershed;
                    if (grids.per_class)
                        ws.seed_threshold[c] = std::max(v, ws.fg_threshold[c]);
                    else
                        for (int k = 0; k < C; ++k)
                            ws.seed_threshold[k] = std::max(v, ws.fg_threshold[k]);
                    return true;
                },
                grids.seed_thresholds);
            scan(
                [&](PostprocessConfig& cfg, float v) {
                    auto& ws = cfg.watershed;
                    if (grids.per_class) {
                        if (v > ws.seed_threshold[c]) return false;
                        ws.fg_threshold[c] = v;
                    } else {
                        for (int k = 0; k < C; ++k)
                            if (v > ws.seed_threshold[k]) return false;
                        for (int k = 0; k < C; ++k) ws.fg_threshold[k] = v;
                    }
                    return true;
                },
                grids.fg_thresholds);
            scan(
                [&](PostprocessConfig& cfg, int v) {
                    if (grids.per_class) {
                        if (v >= cfg.filter.max_area[c]) return false;
                        cfg.filter.min_area[c] = v;
                    } else {
                        for (int k = 0; k < C; ++k)
                            if (v >= cfg.filter.max_area[k]) return false;
                        for (int k = 0; k < C; ++k) cfg.filter.min_area[k] = v;
                    }
                    return true;
                },
                grids.min_areas);
            scan(
                [&](PostprocessConfig& cfg, int v) {
                    if (grids.per_class) {
                        if (v <= cfg.filter.min_area[c]) return false;
                        cfg.filter.max_area[c] = v;
                    } else {
                        for (int k = 0; k < C; ++k)
                            if (v <= cfg.filter.min_area[k]) return false;
                        for (int k = 0; k < C; ++k) cfg.filter.max_area[k] = v;
                    }
                    return true;
                },
                grids.max_areas);
            scan(
                [&](PostprocessConfig& cfg, float v) {
                    if (grids.per_class)
                        cfg.filter.min_solidity[c] = v;
                    else
                        for (int k = 0; k < C; ++k) cfg.filter.min_solidity[k] = v;
                    return true;
                },
                grids.min_solidities);
        }
    }
    res.best_index = 0;
    return res;
}

} // namespace panseg::postprocess
