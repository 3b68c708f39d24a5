#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "panseg/augment/augment.hpp"
#include "panseg/core/raster.hpp"
#include "panseg/loss/loss.hpp"
#include "panseg/targets/targets.hpp"

namespace panseg::model {

// 3x3 convolution, stride 1, zero same-padding. Weights are stored as
// [out_c][ky][3*in_c] so each kernel row is contiguous and the inner loops
// reduce to dot/axpy kernels over channel-last image rows.
struct ConvLayer {
    int in_c = 0;
    int out_c = 0;
    std::vector<float> w; // out_c * 3 * (3*in_c)
    std::vector<float> b; // out_c

    ConvLayer() = default;
    ConvLayer(int in_channels, int out_channels)
        : in_c(in_channels), out_c(out_channels),
          w(static_cast<std::size_t>(out_channels) * 3 * 3 * in_channels, 0.0f),
          b(static_cast<std::size_t>(out_channels), 0.0f) {}

    float* row(int oc, int ky) { return w.data() + (static_cast<std::size_t>(oc) * 3 + ky) * 3 * in_c; }
    const float* row(int oc, int ky) const {
        return w.data() + (static_cast<std::size_t>(oc) * 3 + ky) * 3 * in_c;
    }
};

// Shared two-conv trunk with tanh nonlinearities and per-layer dropout,
// then one conv head per decoder: semantic C planes; instance head with
// 3 three-label planes + 2 center-vector planes.
struct ModelParams {
    ConvLayer conv1, conv2, sem_head, inst_head;
    int classes = 0;
    int trunk_channels = 0;
    float dropout_rate = 0.2f;

    std::size_t parameter_count() const;
};

ModelParams init_model(int classes, int trunk_channels, float dropout_rate, std::uint64_t seed);

// Gradient containers share the parameter layout.
ModelParams zeros_like(const ModelParams& p);

enum class RunMode { train, eval, mc_dropout };

struct ForwardResult {
    RasterF32 a1, d1; // post-tanh and post-dropout trunk activations
    RasterF32 a2, d2;
    std::vector<std::uint8_t> mask1, mask2; // dropout keep masks
    RasterF32 sem_logits; // [H,W,C]
    RasterF32 tri_logits; // [H,W,3]
    RasterF32 vec_planes; // [H,W,2]
};

// Deterministic given (params, img, mode, seed); dropout is active in train
// and mc_dropout modes (inverted convention, so eval needs no rescaling).
ForwardResult forward(const ModelParams& params, const RasterF32& img, RunMode mode,
                      std::uint64_t seed = 0);

struct LossBreakdown {
    double total = 0.0;
    double sem_ce = 0.0;
    double tri_ce = 0.0;
    double vec_l2 = 0.0;
};

// Forward + analytic backward. Gradients are accumulated into `grads`
// (zeroed by the caller). The two heads touch disjoint parameters.
LossBreakdown backward(const ModelParams& params, const RasterF32& img, const SemanticMap& sem,
                       const targets::ThreeLabelTarget& tri,
                       const targets::CenterVectorField& vec,
                       const std::vector<std::uint8_t>& fg_mask,
                       const loss::LossWeights& weights, RunMode mode, std::uint64_t seed,
                       float instance_loss_weight, ModelParams& grads);

// Softmaxed class probabilities for both heads (the TTA model function).
std::pair<RasterF32, RasterF32> predict_probs(const ModelParams& params, const RasterF32& img,
                                              std::optional<std::uint64_t> dropout_seed);

struct AdamWState {
    ModelParams m, v;
    std::int64_t step = 0;
};

AdamWState make_optimizer(const ModelParams& params);
void adamw_update(ModelParams& params, const ModelParams& grads, AdamWState& state, float lr,
                  float beta1 = 0.9f, float beta2 = 0.999f, float eps = 1e-8f,
                  float weight_decay = 1e-4f);

// lr(t) = lr_min + 0.5*(lr_base - lr_min)*(1 + cos(pi*t/T))
double cosine_lr(std::int64_t t, std::int64_t horizon, double lr_base, double lr_min);

// Checkpoints: a directory of tensor files plus a key=value manifest.
void save_checkpoint(const ModelParams& params, const std::filesystem::path& dir,
                     const std::map<std::string, std::string>& extra = {});
ModelParams load_checkpoint(const std::filesystem::path& dir);

} // namespace panseg::model
