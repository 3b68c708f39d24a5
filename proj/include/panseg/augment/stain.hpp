#pragma once

#include <array>

#include "panseg/core/raster.hpp"

namespace panseg::augment {

// Optical-density stain basis for color deconvolution (Beer-Lambert):
// od_rgb = -log(rgb), hed = od_rgb * od_inv, od_rgb = hed * od.
// Rows are the unit-normalized H, E and D stain directions in RGB-OD space.
struct StainBasis {
    std::array<std::array<double, 3>, 3> od{};
    std::array<std::array<double, 3>, 3> od_inv{};

    // Ruifrok & Johnston H&E-DAB matrix (the standard basis).
    static StainBasis hed();
    // Normalizes rows and inverts; errors if the matrix is singular.
    static StainBasis from_rows(const std::array<std::array<double, 3>, 3>& rows);
};

// RGB in [0,1] (values below od_floor are clamped before the log) -> HED
// stain intensities, and back. hed_to_rgb(rgb_to_hed(x)) == x for x above
// the floor.
RasterF32 rgb_to_hed(const RasterF32& rgb, const StainBasis& basis, float od_floor = 1e-6f);
RasterF32 hed_to_rgb(const RasterF32& hed, const StainBasis& basis);

// Scales each HED channel (stain concentration scaling), returns RGB.
RasterF32 scale_hed_channels(const RasterF32& rgb, const StainBasis& basis,
                             const std::array<float, 3>& scales);

} // namespace panseg::augment
