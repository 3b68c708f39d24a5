#pragma once

#include <cstdint>
#include <vector>

#include "panseg/core/raster.hpp"

namespace panseg::sampler {

// Per-image, per-class pixel occupancy. Rows sum to 1 since the classes
// (background included) partition the pixels of each image.
struct ClassOccupancy {
    int num_images = 0;
    int num_classes = 0;
    std::vector<double> x; // row-major [image][class]

    double at(int n, int c) const { return x[static_cast<std::size_t>(n) * num_classes + c]; }
    double& at(int n, int c) { return x[static_cast<std::size_t>(n) * num_classes + c]; }
};

ClassOccupancy occupancy(const std::vector<SemanticMap>& maps, int num_classes);

// Image draw probabilities: p_n = (1/|c|) * sum_c X_{c,n} / sum_n X_{c,n}.
// Classes absent from the whole dataset are dropped from the class average.
std::vector<double> sampling_distribution(const ClassOccupancy& occ);

// epoch_size indices drawn i.i.d. with replacement from dist (pcg32-seeded).
std::vector<int> draw_epoch(const std::vector<double>& dist, int epoch_size, std::uint64_t seed);

} // namespace panseg::sampler
