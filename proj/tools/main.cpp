// panseg: panoptic nuclei segmentation pipeline CLI.
// Exit codes: 0 ok, 2 config error, 3 I/O or file-format error,
// 4 numerical divergence, 5 invalid arguments, 1 anything else.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "panseg/kernels/kernels.hpp"
#include "panseg/pipeline/commands.hpp"

namespace {

int exit_code_for(panseg::Errc code) {
    switch (code) {
        case panseg::Errc::config: return 2;
        case panseg::Errc::io:
        case panseg::Errc::bad_magic:
        case panseg::Errc::truncated:
        case panseg::Errc::dims_overflow: return 3;
        case panseg::Errc::divergence: return 4;
        case panseg::Errc::invalid_argument: return 5;
    }
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"panseg: imbalance-aware panoptic nuclei segmentation pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("-c,--config", config_path, "pipeline config file (defaults when omitted)");
    app.add_option("-s,--set", overrides, "override: section.key=value (repeatable)");

    std::string corpus, out_dir, probs_dir, gt_dir, pred_dir, out_csv, val_dir;
    std::vector<std::string> checkpoints;

    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
    synth->add_option("-o,--out", out_dir, "output corpus directory")->required();

    auto* encode = app.add_subcommand("encode-targets", "write three-label + vector targets");
    encode->add_option("--corpus", corpus, "corpus directory")->required();
    encode->add_option("-o,--out", out_dir, "output directory")->required();

    auto* stats = app.add_subcommand("sample-stats", "occupancy table and draw probabilities");
    stats->add_option("--corpus", corpus, "corpus directory")->required();
    stats->add_option("-o,--out", out_csv, "output CSV path")->required();

    auto* train = app.add_subcommand("train", "train the two-head model");
    train->add_option("--corpus", corpus, "training corpus")->required();
    train->add_option("--val-corpus", val_dir, "separate validation corpus");
    train->add_option("-o,--out", out_dir, "run directory")->required();

    auto* infer = app.add_subcommand("infer", "TTA inference to probability stacks");
    infer->add_option("--checkpoint", checkpoints, "checkpoint dir (repeat to ensemble)")
        ->required();
    infer->add_option("--corpus", corpus, "input corpus")->required();
    infer->add_option("-o,--out", out_dir, "output directory")->required();

    auto* post = app.add_subcommand("postprocess", "probability stacks to labeled instances");
    post->add_option("--probs", probs_dir, "probability directory")->required();
    post->add_option("-o,--out", out_dir, "output directory")->required();

    auto* tune = app.add_subcommand("tune", "grid-search post-processing thresholds");
    tune->add_option("--probs", probs_dir, "probability directory")->required();
    tune->add_option("--gt", gt_dir, "ground-truth corpus")->required();
    tune->add_option("-o,--out", out_dir, "output directory")->required();

    auto* evaluate = app.add_subcommand("evaluate", "PQ+/mPQ+/R2 report");
    evaluate->add_option("--pred", pred_dir, "prediction directory")->required();
    evaluate->add_option("--gt", gt_dir, "ground-truth corpus")->required();
    evaluate->add_option("-o,--out", out_dir, "report directory")->required();

    auto* dump = app.add_subcommand("config", "print the effective config");

    CLI11_PARSE(app, argc, argv);

    try {
        panseg::config::PipelineConfig cfg =
            panseg::config::PipelineConfig::load(config_path, overrides);
        namespace pl = panseg::pipeline;

        if (synth->parsed()) {
            pl::run_synth(cfg, out_dir);
            std::printf("synth: %d tiles -> %s\n", cfg.synth_tiles, out_dir.c_str());
        } else if (encode->parsed()) {
            pl::run_encode_targets(cfg, corpus, out_dir);
            std::printf("encode-targets: %s -> %s\n", corpus.c_str(), out_dir.c_str());
        } else if (stats->parsed()) {
            pl::run_sample_stats(cfg, corpus, out_csv);
            std::printf("sample-stats: %s -> %s\n", corpus.c_str(), out_csv.c_str());
        } else if (train->parsed()) {
            std::optional<pl::fs::path> val;
            if (!val_dir.empty()) val = val_dir;
            pl::TrainOutput out = pl::run_train(cfg, corpus, val, out_dir);
            std::printf("train: best val mPQ+ %.4f at step %lld (kernels: %s)\n", out.best_val,
                        static_cast<long long>(out.best_step),
                        panseg::kernels::backend_name());
        } else if (infer->parsed()) {
            std::vector<pl::fs::path> cps(checkpoints.begin(), checkpoints.end());
            pl::run_infer(cfg, cps, corpus, out_dir);
            std::printf("infer: %zu model(s), %d passes -> %s\n", cps.size(), cfg.tta_passes,
                        out_dir.c_str());
        } else if (post->parsed()) {
            pl::run_postprocess(cfg, probs_dir, out_dir);
            std::printf("postprocess: %s -> %s\n", probs_dir.c_str(), out_dir.c_str());
        } else if (tune->parsed()) {
            pl::TuneOutput out = pl::run_tune(cfg, probs_dir, gt_dir, out_dir);
            std::printf("tune: best %s = %.4f -> %s\n", cfg.tune_objective.c_str(),
                        out.best_score, out.best_config.string().c_str());
        } else if (evaluate->parsed()) {
            pl::EvaluateOutput out = pl::run_evaluate(cfg, pred_dir, gt_dir, out_dir);
            std::printf("evaluate: mPQ+ %.4f R2 %.4f -> %s\n", out.mpq, out.r2_mean,
                        out_dir.c_str());
        } else if (dump->parsed()) {
            std::fputs(cfg.to_text().c_str(), stdout);
        }
        return 0;
    } catch (const panseg::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
