#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "panseg/augment/stain.hpp"
#include "panseg/core/raster.hpp"

namespace panseg::synth {

// Per nucleus class: instance frequency, area statistics (px) and the HED
// stain signature the class is rendered with.
struct ClassProfile {
    double frequency = 0.0;
    double mean_area = 0.0;
    double std_area = 0.0;
    std::array<float, 3> hed{0.6f, 0.2f, 0.0f};
};

struct SceneConfig {
    int height = 256;
    int width = 256;
    double density = 0.16;          // target fraction of pixels covered by nuclei
    double notch_probability = 0.0; // concave bite carved into an instance
    double min_gap = 1.0;           // pixels of separation enforced between instances
    int max_attempts_per_instance = 200;
    std::vector<ClassProfile> classes; // index 0 = background slot, unused
    augment::StainBasis basis = augment::StainBasis::hed();

    // Nucleus statistics and imbalance profile of the challenge data
    // (classes 1..6 = neutrophil, epithelial, lymphocyte, plasma,
    // eosinophil, connective).
    static SceneConfig lizard_like();
};

struct Scene {
    RasterF32 image; // RGB in [0,1]
    InstanceMap inst;
    SemanticMap sem;
    std::vector<long long> counts; // per class, entry 0 = 0
};

// Non-overlapping ellipses with class-conditional sizes and stain colors,
// rendered through the HED basis; ground truth is exact by construction and
// the output is deterministic per seed.
Scene generate(const SceneConfig& cfg, std::uint64_t seed);

} // namespace panseg::synth
