#pragma once

#include <array>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "panseg/augment/stain.hpp"
#include "panseg/core/raster.hpp"
#include "panseg/targets/targets.hpp"

namespace panseg::augment {

// The 8 exact spatial symmetries of the pixel grid. Rot90 is clockwise.
enum class Dihedral : int {
    identity = 0,
    rot90 = 1,
    rot180 = 2,
    rot270 = 3,
    flip_h = 4,     // mirror left-right
    flip_v = 5,     // mirror top-bottom
    transpose = 6,
    anti_transpose = 7,
};

Dihedral inverse(Dihedral t);

RasterF32 apply_dihedral(const RasterF32& in, Dihedral t);
InstanceMap apply_dihedral(const InstanceMap& in, Dihedral t);
SemanticMap apply_dihedral(const SemanticMap& in, Dihedral t);

// Moves the field spatially and permutes/negates the (dy,dx) components so
// vectors keep pointing at the transformed centroids. Under rot90:
// (dy,dx) -> (dx,-dy).
targets::CenterVectorField apply_dihedral(const targets::CenterVectorField& in, Dihedral t);

// One training sample: image plus aligned ground-truth maps.
struct Sample {
    RasterF32 image;
    InstanceMap inst;
    SemanticMap sem;
};

struct TrainAugmentConfig {
    bool enabled = true;
    // photometric (image only)
    float hed_jitter = 0.1f;      // per-channel HED scale in [1-j, 1+j]
    float rgb_jitter = 0.05f;     // per-channel multiplicative + additive jitter
    float blur_sigma_max = 1.0f;  // gaussian blur sigma drawn in [0, max]
    float blur_probability = 0.3f;
    float noise_std_max = 0.03f;  // gaussian noise sigma drawn in [0, max]
    // spatial (image + maps, exact integer ops)
    bool dihedral = true;
    int translate_max = 8; // pixels, per axis
    StainBasis basis = StainBasis::hed();
};

// Photometric jitter on the image plus one dihedral transform and an integer
// translation applied consistently to image and maps. Deterministic per seed.
// Targets are meant to be re-encoded from the returned instance map.
Sample augment_train(const Sample& in, const TrainAugmentConfig& cfg, std::uint64_t seed);

// Test-time augmentation plan. A nullopt dropout seed means the pass runs in
// eval mode (no test-time dropout).
struct TTAPass {
    Dihedral transform = Dihedral::identity;
    std::array<float, 3> hed_scales{1.0f, 1.0f, 1.0f};
    std::optional<std::uint64_t> dropout_seed;
    int model_index = 0;
};

// Passes cycle deterministically through the dihedral group; HED scales are
// drawn uniformly from [1-jitter, 1+jitter]. With several models the passes
// are spread round-robin (a second model's passes are extra TTA samples).
std::vector<TTAPass> make_tta_plan(int passes, int num_models, float hed_jitter,
                                   bool test_time_dropout, std::uint64_t seed);

// Per-pass model evaluation: returns per-pixel semantic and three-label
// class probabilities for the (already transformed) input image.
using ModelFn = std::function<std::pair<RasterF32, RasterF32>(
    const RasterF32& image, std::optional<std::uint64_t> dropout_seed)>;

struct TtaResult {
    RasterF32 sem_probs; // [H,W,C]
    RasterF32 tri_probs; // [H,W,3]
};

// Runs every pass (transform input, forward, inverse-transform the
// probability planes) and averages pixel-wise. Errors on an empty plan.
TtaResult tta_average(const std::vector<ModelFn>& models, const RasterF32& image,
                      const std::vector<TTAPass>& plan, const StainBasis& basis,
                      int threads = 1);

} // namespace panseg::augment
