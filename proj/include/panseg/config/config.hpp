#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "panseg/model/train.hpp"
#include "panseg/postprocess/tune.hpp"
#include "panseg/synth/synth.hpp"

namespace panseg::config {

// Raw "[section]" / "key = value" file. '#' and ';' start comments.
struct ConfigFile {
    std::map<std::string, std::map<std::string, std::string>> sections;

    static ConfigFile parse_text(const std::string& text, const std::string& origin = "<text>");
    static ConfigFile parse(const std::filesystem::path& path);

    // "section.key=value"
    void set_override(const std::string& keyval);
};

// Every stage of the pipeline reads from this one struct. Defaults follow the
// training recipe and data statistics the pipeline reproduces; anything else
// is a documented project decision.
struct PipelineConfig {
    // pipeline
    int classes = 7;
    std::vector<std::string> class_names = {"background", "neutrophil", "epithelial",
                                            "lymphocyte", "plasma",     "eosinophil",
                                            "connective"};
    int threads = 0; // 0 = auto (PANSEG_THREADS env, then hardware)
    std::string rng = "pcg32";
    std::uint64_t seed = 1;

    // synth
    int synth_tiles = 16;
    synth::SceneConfig scene = synth::SceneConfig::lizard_like();

    // targets
    int boundary_width = 2;
    bool boundary_from_other_instances = true;

    // sampler
    int epoch_size = 0; // 0 = dataset size

    // loss
    float rho = 3.0f;
    float label_smoothing = 0.05f;
    float ema_decay = 0.99f;
    float focal_gamma = 0.0f;

    // model
    int trunk_channels = 16;
    float dropout = 0.2f;

    // train
    int steps = 600;
    int batch_size = 4;
    float lr_base = 3e-3f;
    float lr_min = 0.0f;
    float weight_decay = 1e-4f;
    int val_interval = 100;
    bool importance_sampling = true;
    bool loss_weighting = true;
    float instance_loss_weight = 1.0f;
    float val_fraction = 0.15f; // used when no separate validation corpus is given

    // augment
    augment::TrainAugmentConfig aug;

    // tta
    int tta_passes = 16;
    float tta_hed_jitter = 0.1f;
    bool tta_dropout = true;

    // postprocess
    postprocess::PostprocessConfig post = default_postprocess();

    // tune
    postprocess::TuneGrids tune_grids = default_tune_grids();
    std::string tune_objective = "mpq";

    // evaluate
    int count_crop = 224;

    static postprocess::PostprocessConfig default_postprocess();
    static postprocess::TuneGrids default_tune_grids();

    static PipelineConfig defaults() { return {}; }
    static PipelineConfig from_file(const ConfigFile& file);
    static PipelineConfig load(const std::filesystem::path& path,
                               const std::vector<std::string>& overrides = {});

    model::TrainConfig train_config() const;

    // Canonical serialization; a parse round-trip reproduces the config.
    std::string to_text() const;
    void save(const std::filesystem::path& path) const;
};

} // namespace panseg::config
