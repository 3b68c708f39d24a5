#pragma once

#include "panseg/core/raster.hpp"

namespace panseg::targets {

// Per-pixel {background=0, interior=1, boundary=2} instance-training target.
struct ThreeLabelTarget {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> labels;

    ThreeLabelTarget() = default;
    ThreeLabelTarget(int h, int w)
        : height(h), width(w), labels(static_cast<std::size_t>(h) * w, 0) {}
    std::uint8_t& at(int y, int x) { return labels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const {
        return labels[static_cast<std::size_t>(y) * width + x];
    }
};

// Offsets from each pixel to its instance centroid, in raw pixel units;
// zero outside instances.
struct CenterVectorField {
    int height = 0;
    int width = 0;
    std::vector<float> dy;
    std::vector<float> dx;

    CenterVectorField() = default;
    CenterVectorField(int h, int w)
        : height(h), width(w), dy(static_cast<std::size_t>(h) * w, 0.0f),
          dx(static_cast<std::size_t>(h) * w, 0.0f) {}
    std::size_t index(int y, int x) const { return static_cast<std::size_t>(y) * width + x; }
};

// Boundary: instance pixels within `boundary_width` Chebyshev distance of any
// in-image pixel outside the instance. With other_instances_are_outside (the
// default) pixels of a different instance count as outside, so adjacent
// instances stay separable; otherwise only background counts.
// Instances thinner than 2*boundary_width end up with no interior pixels.
ThreeLabelTarget encode_three_label(const InstanceMap& inst, int boundary_width,
                                    bool other_instances_are_outside = true);

CenterVectorField encode_center_vectors(const InstanceMap& inst);

// 1 on instance foreground, 0 elsewhere.
std::vector<std::uint8_t> foreground_mask(const InstanceMap& inst);

} // namespace panseg::targets
