#pragma once

#include <array>
#include <vector>

#include "panseg/core/raster.hpp"

namespace panseg {

// Labels the maximal connected foreground regions of a binary plane.
// Input values must be exactly 0 or 1. Labels are assigned 1..K in ascending
// raster-scan order of each region's first pixel, so output is deterministic.
InstanceMap connected_components(const RasterF32& binary_plane, int connectivity);

// Byte-mask variant used internally and by post-processing.
InstanceMap connected_components_mask(const std::vector<std::uint8_t>& mask, int height,
                                      int width, int connectivity);

// Background components not 4-connected to the image border become foreground.
RasterF32 fill_holes(const RasterF32& binary_plane);
void fill_holes_mask(std::vector<std::uint8_t>& mask, int height, int width);

// Foreground area divided by the area of the convex hull over the corner
// points of every foreground pixel, so a single pixel has solidity 1.
// Errors on an empty mask.
double solidity(const RasterF32& binary_plane);
double solidity_mask(const std::vector<std::uint8_t>& mask, int height, int width);

// Convex hull (monotone chain) of integer points; returns the hull polygon
// counter-clockwise without the closing point. Exposed for the geometry used
// by solidity.
struct Point2i {
    long long x = 0;
    long long y = 0;
};
std::vector<Point2i> convex_hull(std::vector<Point2i> points);
double polygon_area(const std::vector<Point2i>& polygon); // shoelace, >= 0

} // namespace panseg
