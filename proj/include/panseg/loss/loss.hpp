#pragma once

#include <span>
#include <vector>

#include "panseg/core/raster.hpp"
#include "panseg/targets/targets.hpp"

namespace panseg::loss {

// Exponential moving average class prior X^t_c with decay gamma.
struct ClassPrior {
    std::vector<float> value;
    float decay = 0.99f;
};

ClassPrior make_prior(std::span<const float> initial, float decay);

// X^{t+1}_c = gamma * X^t_c + (1 - gamma) * X_{c,batch}; functional update.
ClassPrior ema_update(const ClassPrior& prior, std::span<const float> batch_occupancy);

// w_c = (1 - X_c)^rho. rho defaults to 3, label smoothing to 0.05.
struct LossWeights {
    std::vector<float> w;
    float rho = 3.0f;
    float smoothing = 0.05f;
};

LossWeights class_weights(const ClassPrior& prior, float rho);
LossWeights uniform_weights(int num_classes, float smoothing = 0.05f);

// Per-class pixel occupancy of one semantic map (float precision is enough
// for the EMA update feed).
std::vector<float> occupancy_counts(const SemanticMap& sem, int num_classes);

struct CeResult {
    double loss = 0.0;
    RasterF32 grad_logits;
};

// Label-smoothed, class-weighted cross entropy, mean over pixels:
//   q_c = (1-eps) * [c == t] + eps / C
//   pixel loss = w_t * sum_c -q_c * log softmax(logits)_c
// With focal_gamma > 0 the pixel loss gains a (1 - p_t)^focal_gamma factor.
// grad_logits is the exact analytic gradient of the mean loss.
CeResult weighted_smoothed_ce(const RasterF32& logits, const SemanticMap& target,
                              const LossWeights& weights, float focal_gamma = 0.0f);

struct InstanceLossResult {
    double loss = 0.0;
    double ce_term = 0.0;
    double l2_term = 0.0;
    RasterF32 grad_tri;
    RasterF32 grad_vec;
};

// Instance-decoder loss: mean-pixel cross entropy over the three-label planes
// plus mean squared vector error over foreground pixels. An empty foreground
// makes the L2 term 0.
InstanceLossResult instance_loss(const RasterF32& tri_logits,
                                 const targets::ThreeLabelTarget& tri_target,
                                 const RasterF32& vec_pred,
                                 const targets::CenterVectorField& vec_target,
                                 const std::vector<std::uint8_t>& fg_mask);

} // namespace panseg::loss
