#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "panseg/config/config.hpp"

namespace panseg::pipeline {

namespace fs = std::filesystem;

// Corpus directory layout (shared by every stage):
//   tile_NNNN.png          RGB image
//   tile_NNNN_inst.tns     instance labels, u16 [H,W]
//   tile_NNNN_sem.tns      semantic classes, u8 [H,W]
//   counts.csv             per-tile true instance counts
//   config.ini             config echo
// Derived artifacts keep the tile_NNNN prefix (_tri/_vec targets,
// _semprob/_triprob probabilities, _pred predictions).

std::string tile_name(int index);

// Indices of tiles present in a directory (sorted ascending).
std::vector<int> list_tiles(const fs::path& dir, const std::string& suffix = "_inst.tns");

struct CorpusSample {
    int index = 0;
    RasterF32 image;
    InstanceMap inst;
    SemanticMap sem;
};

std::vector<CorpusSample> load_corpus(const fs::path& dir);

void run_synth(const config::PipelineConfig& cfg, const fs::path& out_dir);

void run_encode_targets(const config::PipelineConfig& cfg, const fs::path& corpus,
                        const fs::path& out_dir);

void run_sample_stats(const config::PipelineConfig& cfg, const fs::path& corpus,
                      const fs::path& out_csv);

struct TrainOutput {
    double best_val = -1.0;
    std::int64_t best_step = -1;
    fs::path best_checkpoint;
    fs::path last_checkpoint;
};

// Optional val_corpus; otherwise the tail val_fraction of the corpus is held
// out. Writes best/ and last/ checkpoints plus train_log.csv.
TrainOutput run_train(const config::PipelineConfig& cfg, const fs::path& corpus,
                      const std::optional<fs::path>& val_corpus, const fs::path& out_dir);

// TTA inference; several checkpoints form an ensemble whose passes are
// treated as extra TTA samples. Writes per-tile probability stacks.
void run_infer(const config::PipelineConfig& cfg, const std::vector<fs::path>& checkpoints,
               const fs::path& corpus, const fs::path& out_dir);

// Reads probability stacks, writes tile_NNNN_pred.tns + pred_classes.csv.
void run_postprocess(const config::PipelineConfig& cfg, const fs::path& probs_dir,
                     const fs::path& out_dir);

struct TuneOutput {
    double best_score = 0.0;
    fs::path best_config;
};

// Coordinate-wise threshold search against ground truth; writes
// best_config.ini and scores.csv.
TuneOutput run_tune(const config::PipelineConfig& cfg, const fs::path& probs_dir,
                    const fs::path& gt_dir, const fs::path& out_dir);

struct EvaluateOutput {
    double mpq = 0.0;
    double r2_mean = 0.0;
    std::vector<double> per_class_pq;
};

// Compares predictions (pred.tns + pred_classes.csv) against ground truth,
// writes report.csv and report.txt.
EvaluateOutput run_evaluate(const config::PipelineConfig& cfg, const fs::path& pred_dir,
                            const fs::path& gt_dir, const fs::path& out_dir);

} // namespace panseg::pipeline
