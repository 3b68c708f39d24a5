#pragma once

#include <functional>

#include "panseg/model/model.hpp"
#include "panseg/sampler/sampler.hpp"

namespace panseg::model {

struct TrainConfig {
    int steps = 500;
    int batch_size = 4;
    float lr_base = 3e-3f;
    float lr_min = 0.0f;
    float weight_decay = 1e-4f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float adam_eps = 1e-8f;
    int val_interval = 100;
    std::uint64_t seed = 1;

    bool importance_sampling = true; // image-level resampling
    bool loss_weighting = true;      // EMA-prior class weights
    float rho = 3.0f;
    float smoothing = 0.05f;
    float ema_decay = 0.99f;
    float focal_gamma = 0.0f;
    float instance_loss_weight = 1.0f;
    int epoch_size = 0; // draws per epoch; 0 means dataset size

    int boundary_width = 2;
    bool boundary_from_other_instances = true;

    int num_classes = 7;
    int trunk_channels = 16;
    float dropout = 0.2f;
    int threads = 0;

    augment::TrainAugmentConfig aug;
};

struct TrainLogRow {
    std::int64_t step = 0;
    double lr = 0.0;
    double total = 0.0;
    double sem_ce = 0.0;
    double tri_ce = 0.0;
    double vec_l2 = 0.0;
    double val_mpq = -1.0; // < 0 when no validation ran at this step
};

struct TrainResult {
    ModelParams best_params;
    ModelParams final_params;
    std::vector<TrainLogRow> log;
    double best_val = -1.0;
    std::int64_t best_step = -1;
};

// Scores a candidate checkpoint on the validation set (typically mPQ+);
// checkpoint selection keeps the best-scoring parameters.
using ValidateFn = std::function<double(const ModelParams&)>;

// Per-epoch subset draw (Eq. importance sampling when enabled) -> augment ->
// forward/backward -> AdamW step under a cosine-annealed learning rate.
// Aborts with a divergence error if the loss goes non-finite.
TrainResult train(const TrainConfig& cfg, const std::vector<augment::Sample>& train_set,
                  const ValidateFn& validate = nullptr);

} // namespace panseg::model
