#include "panseg/pipeline/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "panseg/core/parallel.hpp"
#include "panseg/core/png_io.hpp"
#include "panseg/core/rng.hpp"
#include "panseg/core/tensor_io.hpp"
#include "panseg/metrics/metrics.hpp"
#include "panseg/model/train.hpp"
#include "panseg/postprocess/tune.hpp"
#include "panseg/sampler/sampler.hpp"
#include "panseg/synth/synth.hpp"

namespace panseg::pipeline {

namespace {

std::string csv_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

void echo_config(const config::PipelineConfig& cfg, const fs::path& dir) {
    cfg.save(dir / "config.ini");
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) fail(Errc::io, "cannot write: " + path.string());
    return os;
}

} // namespace

std::string tile_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "tile_%04d", index);
    return buf;
}

std::vector<int> list_tiles(const fs::path& dir, const std::string& suffix) {
    if (!fs::is_directory(dir)) fail(Errc::io, "not a directory: " + dir.string());
    std::vector<int> indices;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::string name = entry.path().filename().string();
        if (name.rfind("tile_", 0) != 0) continue;
        if (name.size() <= 5 + suffix.size()) continue;
        if (name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) continue;
        std::string digits = name.substr(5, name.size() - 5 - suffix.size());
        if (digits.empty() ||
            digits.find_first_not_of("0123456789") != std::string::npos)
            continue;
        indices.push_back(std::stoi(digits));
    }
    std::sort(indices.begin(), indices.end());
    return indices;
}

std::vector<CorpusSample> load_corpus(const fs::path& dir) {
    std::vector<int> indices = list_tiles(dir);
    if (indices.empty()) fail(Errc::io, "no tiles found in: " + dir.string());
    std::vector<CorpusSample> out(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::string base = tile_name(indices[i]);
        out[i].index = indices[i];
        out[i].image = read_png_rgb(dir / (base + ".png"));
        out[i].inst = read_instance(dir / (base + "_inst.tns"));
        out[i].sem = read_semantic(dir / (base + "_sem.tns"));
    }
    return out;
}

void run_synth(const config::PipelineConfig& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const int n = cfg.synth_tiles;
    require(n >= 1, Errc::config, "synth: tiles must be >= 1");

    std::vector<synth::Scene> scenes(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), cfg.threads, [&](std::size_t i) {
        scenes[i] = synth::generate(cfg.scene, mix_seed(cfg.seed, i));
    });

    std::ofstream counts = open_out(out_dir / "counts.csv");
    counts << "image_id";
    for (int c = 1; c < cfg.classes; ++c) counts << "," << cfg.class_names[c];
    counts << "\n";
    for (int i = 0; i < n; ++i) {
        const std::string base = tile_name(i);
        write_png_rgb(scenes[i].image, out_dir / (base + ".png"));
        write_instance(scenes[i].inst, out_dir / (base + "_inst.tns"));
        write_semantic(scenes[i].sem, out_dir / (base + "_sem.tns"));
        counts << i;
        for (int c = 1; c < cfg.classes; ++c) counts << "," << scenes[i].counts[c];
        counts << "\n";
    }
    echo_config(cfg, out_dir);
}

void run_encode_targets(const config::PipelineConfig& cfg, const fs::path& corpus,
                        const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::vector<int> indices = list_tiles(corpus);
    if (indices.empty()) fail(Errc::io, "no tiles found in: " + corpus.string());
    parallel_for(indices.size(), cfg.threads, [&](std::size_t i) {
        const std::string base = tile_name(indices[i]);
        InstanceMap inst = read_instance(corpus / (base + "_inst.tns"));
        targets::ThreeLabelTarget tri = targets::encode_three_label(
            inst, cfg.boundary_width, cfg.boundary_from_other_instances);
        SemanticMap tri_map(tri.height, tri.width);
        tri_map.classes = tri.labels;
        write_semantic(tri_map, out_dir / (base + "_tri.tns"));

        targets::CenterVectorField vec = targets::encode_center_vectors(inst);
        RasterF32 field(vec.height, vec.width, 2);
        for (std::size_t p = 0; p < field.pixel_count(); ++p) {
            field.data[p * 2 + 0] = vec.dy[p];
            field.data[p * 2 + 1] = vec.dx[p];
        }
        write_raster(field, out_dir / (base + "_vec.tns"));
    });
    echo_config(cfg, out_dir);
}

void run_sample_stats(const config::PipelineConfig& cfg, const fs::path& corpus,
                      const fs::path& out_csv) {
    std::vector<CorpusSample> samples = load_corpus(corpus);
    std::vector<SemanticMap> sems;
    sems.reserve(samples.size());
    for (const auto& s : samples) sems.push_back(s.sem);

    sampler::ClassOccupancy occ = sampler::occupancy(sems, cfg.classes);
    std::vector<double> p = sampler::sampling_distribution(occ);

    std::ofstream os = open_out(out_csv);
    os << "image_id";
    for (int c = 0; c < cfg.classes; ++c) os << ",X_" << c;
    os << ",p_n\n";
    for (std::size_t n = 0; n < samples.size(); ++n) {
        os << samples[n].index;
        for (int c = 0; c < cfg.classes; ++c)
            os << "," << csv_num(occ.at(static_cast<int>(n), c));
        os << "," << csv_num(p[n]) << "\n";
    }
}

namespace {

// Single-pass (eval mode) validation score: post-process + dataset mPQ+.
double validation_mpq(const model::ModelParams& params,
                      const std::vector<augment::Sample>& val,
                      const config::PipelineConfig& cfg) {
    metrics::MatchStats stats(cfg.classes);
    std::vector<metrics::MatchStats> per_image(val.size(), metrics::MatchStats(cfg.classes));
    parallel_for(val.size(), cfg.threads, [&](std::size_t i) {
        auto [sem_probs, tri_probs] = model::predict_probs(params, val[i].image, std::nullopt);
        postprocess::PostprocessResult pred =
            postprocess::postprocess_image(sem_probs, tri_probs, cfg.post);
        std::vector<int> gt_classes =
            metrics::classes_from_semantic(val[i].inst, val[i].sem, cfg.classes);
        per_image[i] = metrics::match_instances(pred.inst, pred.classes, val[i].inst,
                                                gt_classes, cfg.classes)
                           .stats;
    });
    for (const auto& s : per_image) stats.merge(s);
    return metrics::pq_plus(stats).mpq;
}

} // namespace

TrainOutput run_train(const config::PipelineConfig& cfg, const fs::path& corpus,
                      const std::optional<fs::path>& val_corpus, const fs::path& out_dir) {
    fs::create_directories(out_dir);

    std::vector<CorpusSample> all = load_corpus(corpus);
    std::vector<augment::Sample> train_set, val_set;
    if (val_corpus) {
        for (auto& s : all) train_set.push_back({s.image, s.inst, s.sem});
        for (auto& s : load_corpus(*val_corpus)) val_set.push_back({s.image, s.inst, s.sem});
    } else {
        std::size_t n_val = static_cast<std::size_t>(
            std::max(1.0, std::floor(cfg.val_fraction * static_cast<double>(all.size()))));
        require(n_val < all.size(), Errc::config, "train: validation split leaves no train data");
        for (std::size_t i = 0; i + n_val < all.size(); ++i)
            train_set.push_back({all[i].image, all[i].inst, all[i].sem});
        for (std::size_t i = all.size() - n_val; i < all.size(); ++i)
            val_set.push_back({all[i].image, all[i].inst, all[i].sem});
    }

    model::TrainConfig tc = cfg.train_config();
    model::ValidateFn validate;
    if (!val_set.empty())
        validate = [&](const model::ModelParams& p) { return validation_mpq(p, val_set, cfg); };

    model::TrainResult result = model::train(tc, train_set, validate);

    std::map<std::string, std::string> extra;
    extra["best_val_mpq"] = csv_num(result.best_val);
    extra["best_step"] = std::to_string(result.best_step);
    extra["rng"] = cfg.rng;
    model::save_checkpoint(result.best_params, out_dir / "best", extra);
    model::save_checkpoint(result.final_params, out_dir / "last", extra);

    std::ofstream log = open_out(out_dir / "train_log.csv");
    log << "step,lr,total,sem_ce,tri_ce,vec_l2,val_mpq\n";
    for (const auto& row : result.log) {
        log << row.step << "," << csv_num(row.lr) << "," << csv_num(row.total) << ","
            << csv_num(row.sem_ce) << "," << csv_num(row.tri_ce) << "," << csv_num(row.vec_l2)
            << ",";
        if (row.val_mpq >= 0.0) log << csv_num(row.val_mpq);
        log << "\n";
    }
    echo_config(cfg, out_dir);

    TrainOutput out;
    out.best_val = result.best_val;
    out.best_step = result.best_step;
    out.best_checkpoint = out_dir / "best";
    out.last_checkpoint = out_dir / "last";
    return out;
}

void run_infer(const config::PipelineConfig& cfg, const std::vector<fs::path>& checkpoints,
               const fs::path& corpus, const fs::path& out_dir) {
    require(!checkpoints.empty(), Errc::invalid_argument, "infer: no checkpoint given");
    fs::create_directories(out_dir);

    std::vector<model::ModelParams> models;
    models.reserve(checkpoints.size());
    for (const fs::path& c : checkpoints) models.push_back(model::load_checkpoint(c));

    std::vector<augment::ModelFn> fns;
    for (const auto& m : models)
        fns.push_back([&m](const RasterF32& img, std::optional<std::uint64_t> seed) {
            return model::predict_probs(m, img, seed);
        });

    std::vector<int> indices = list_tiles(corpus, ".png");
    if (indices.empty()) fail(Errc::io, "no tiles found in: " + corpus.string());

    // parallelism lives inside the TTA passes; tiles run sequentially so the
    // per-tile plan seeds do not depend on scheduling
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::string base = tile_name(indices[i]);
        RasterF32 img = read_png_rgb(corpus / (base + ".png"));
        std::vector<augment::TTAPass> plan = augment::make_tta_plan(
            cfg.tta_passes, static_cast<int>(fns.size()), cfg.tta_hed_jitter, cfg.tta_dropout,
            mix_seed(cfg.seed, 0x77a000 + indices[i]));
        augment::TtaResult r =
            augment::tta_average(fns, img, plan, cfg.scene.basis, cfg.threads);
        write_raster(r.sem_probs, out_dir / (base + "_semprob.tns"));
        write_raster(r.tri_probs, out_dir / (base + "_triprob.tns"));
    }
    echo_config(cfg, out_dir);
}

void run_postprocess(const config::PipelineConfig& cfg, const fs::path& probs_dir,
                     const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::vector<int> indices = list_tiles(probs_dir, "_semprob.tns");
    if (indices.empty()) fail(Errc::io, "no probability stacks in: " + probs_dir.string());

    std::vector<postprocess::PostprocessResult> results(indices.size());
    parallel_for(indices.size(), cfg.threads, [&](std::size_t i) {
        const std::string base = tile_name(indices[i]);
        RasterF32 sem = read_raster(probs_dir / (base + "_semprob.tns"));
        RasterF32 tri = read_raster(probs_dir / (base + "_triprob.tns"));
        results[i] = postprocess::postprocess_image(sem, tri, cfg.post);
    });

    std::ofstream classes = open_out(out_dir / "pred_classes.csv");
    classes << "image_id,label,class\n";
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::string base = tile_name(indices[i]);
        write_instance(results[i].inst, out_dir / (base + "_pred.tns"));
        for (std::size_t l = 1; l < results[i].classes.size(); ++l)
            classes << indices[i] << "," << l << "," << results[i].classes[l] << "\n";
    }
    echo_config(cfg, out_dir);
}

namespace {

std::map<int, std::vector<int>> read_classes_csv(const fs::path& path) {
    std::ifstream is(path);
    if (!is) fail(Errc::io, "cannot open: " + path.string());
    std::map<int, std::vector<int>> per_image;
    std::string line;
    std::getline(is, line); // header
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string image, label, cls;
        if (!std::getline(row, image, ',') || !std::getline(row, label, ',') ||
            !std::getline(row, cls, ','))
            fail(Errc::io, "malformed class csv row in " + path.string() + ": " + line);
        int idx = std::stoi(image);
        int l = std::stoi(label);
        auto& v = per_image[idx];
        if (static_cast<int>(v.size()) <= l) v.resize(static_cast<std::size_t>(l) + 1, 0);
        v[l] = std::stoi(cls);
    }
    return per_image;
}

std::vector<postprocess::ValImage> load_val_images(const config::PipelineConfig& cfg,
                                                   const fs::path& probs_dir,
                                                   const fs::path& gt_dir) {
    std::vector<int> indices = list_tiles(probs_dir, "_semprob.tns");
    if (indices.empty()) fail(Errc::io, "no probability stacks in: " + probs_dir.string());
    std::vector<postprocess::ValImage> val(indices.size());
    parallel_for(indices.size(), cfg.threads, [&](std::size_t i) {
        const std::string base = tile_name(indices[i]);
        val[i].sem_probs = read_raster(probs_dir / (base + "_semprob.tns"));
        val[i].tri_probs = read_raster(probs_dir / (base + "_triprob.tns"));
        val[i].gt_inst = read_instance(gt_dir / (base + "_inst.tns"));
        SemanticMap sem = read_semantic(gt_dir / (base + "_sem.tns"));
        val[i].gt_classes = metrics::classes_from_semantic(val[i].gt_inst, sem, cfg.classes);
    });
    return val;
}

} // namespace

TuneOutput run_tune(const config::PipelineConfig& cfg, const fs::path& probs_dir,
                    const fs::path& gt_dir, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::vector<postprocess::ValImage> val = load_val_images(cfg, probs_dir, gt_dir);

    postprocess::Objective obj;
    obj.kind = cfg.tune_objective == "r2" ? postprocess::ObjectiveKind::r2
                                          : postprocess::ObjectiveKind::mpq;
    obj.count_crop = cfg.count_crop;
    obj.num_classes = cfg.classes;

    postprocess::TuneResult result =
        postprocess::tune_coordinatewise(cfg.post, cfg.tune_grids, val, obj, cfg.threads);

    config::PipelineConfig best_cfg = cfg;
    best_cfg.post = result.best;
    best_cfg.save(out_dir / "best_config.ini");

    std::ofstream scores = open_out(out_dir / "scores.csv");
    scores << "candidate," << cfg.tune_objective << "\n";
    for (const auto& e : result.table)
        scores << e.index << "," << csv_num(e.score) << "\n";
    echo_config(cfg, out_dir);

    TuneOutput out;
    out.best_score = result.best_score;
    out.best_config = out_dir / "best_config.ini";
    return out;
}

EvaluateOutput run_evaluate(const config::PipelineConfig& cfg, const fs::path& pred_dir,
                            const fs::path& gt_dir, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::vector<int> indices = list_tiles(pred_dir, "_pred.tns");
    if (indices.empty()) fail(Errc::io, "no predictions in: " + pred_dir.string());
    std::map<int, std::vector<int>> pred_classes = read_classes_csv(pred_dir / "pred_classes.csv");

    metrics::MatchStats stats(cfg.classes);
    metrics::CountTable table = metrics::make_count_table(static_cast<int>(indices.size()),
                                                          cfg.classes);
    std::vector<metrics::MatchStats> per_image(indices.size(), metrics::MatchStats(cfg.classes));
    std::vector<std::vector<long long>> pred_counts(indices.size()), true_counts(indices.size());

    parallel_for(indices.size(), cfg.threads, [&](std::size_t i) {
        const std::string base = tile_name(indices[i]);
        InstanceMap pred = read_instance(pred_dir / (base + "_pred.tns"));
        InstanceMap gt = read_instance(gt_dir / (base + "_inst.tns"));
        SemanticMap gt_sem = read_semantic(gt_dir / (base + "_sem.tns"));
        std::vector<int> gt_cls = metrics::classes_from_semantic(gt, gt_sem, cfg.classes);
        auto it = pred_classes.find(indices[i]);
        std::vector<int> pr_cls =
            it != pred_classes.end() ? it->second : std::vector<int>{0};
        per_image[i] = metrics::match_instances(pred, pr_cls, gt, gt_cls, cfg.classes).stats;

        // counting uses the configured center crop when it fits the tile
        int crop = cfg.count_crop;
        if (crop > pred.height || crop > pred.width) crop = 0;
        pred_counts[i] = metrics::count_with_crop(pred, pr_cls, crop, cfg.classes);
        true_counts[i] = metrics::count_with_crop(gt, gt_cls, crop, cfg.classes);
    });
    for (std::size_t i = 0; i < indices.size(); ++i) {
        stats.merge(per_image[i]);
        for (int c = 0; c < cfg.classes; ++c) {
            table.pred_at(static_cast<int>(i), c) = pred_counts[i][c];
            table.true_at(static_cast<int>(i), c) = true_counts[i][c];
        }
    }

    metrics::PqReport pq = metrics::pq_plus(stats);
    metrics::R2Report r2 = metrics::r_squared(table);

    std::ofstream csv = open_out(out_dir / "report.csv");
    csv << "metric,value\n";
    csv << "mPQ+," << csv_num(pq.mpq) << "\n";
    csv << "R2," << csv_num(r2.mean) << "\n";
    for (int c = 1; c < cfg.classes; ++c)
        csv << "PQ+_" << cfg.class_names[c] << "," << csv_num(pq.per_class[c]) << "\n";
    for (int c = 1; c < cfg.classes; ++c)
        csv << "R2_" << cfg.class_names[c] << "," << csv_num(r2.per_class[c]) << "\n";

    std::ofstream txt = open_out(out_dir / "report.txt");
    txt << "mPQ+    R2    ";
    for (int c = 1; c < cfg.classes; ++c) {
        std::string short_name = cfg.class_names[c].substr(0, 3);
        txt << "  " << short_name;
    }
    txt << "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f  %.3f ", pq.mpq, r2.mean);
    txt << buf;
    for (int c = 1; c < cfg.classes; ++c) {
        std::snprintf(buf, sizeof(buf), " %.3f", pq.per_class[c]);
        txt << buf;
    }
    txt << "\n";
    echo_config(cfg, out_dir);

    EvaluateOutput out;
    out.mpq = pq.mpq;
    out.r2_mean = r2.mean;
    out.per_class_pq = pq.per_class;
    return out;
}

} // namespace panseg::pipeline
