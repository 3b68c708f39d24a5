#pragma once

#include <filesystem>

#include "panseg/core/raster.hpp"

namespace panseg {

// 8-bit RGB PNG I/O. Reads coerce any PNG color type to RGB8 and return
// values in [0,1]; writes clamp to [0,1] and quantize to 8 bit.
RasterF32 read_png_rgb(const std::filesystem::path& path);
void write_png_rgb(const RasterF32& img, const std::filesystem::path& path);

} // namespace panseg
