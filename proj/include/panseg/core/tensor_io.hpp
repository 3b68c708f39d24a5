#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "panseg/core/raster.hpp"

namespace panseg {

// Binary tensor container. On-disk layout, all integers little-endian:
//   bytes 0..3   magic "NTNS"
//   u32          dtype code: 0 = u8, 1 = u16, 2 = f32
//   u32          ndim
//   ndim * u32   dims
//   payload      row-major, element size * product(dims) bytes
enum class Dtype : std::uint32_t { u8 = 0, u16 = 1, f32 = 2 };

std::size_t dtype_size(Dtype d);

struct Tensor {
    Dtype dtype = Dtype::f32;
    std::vector<std::uint32_t> dims;
    std::vector<std::uint8_t> bytes;

    std::size_t element_count() const;
};

Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const Tensor& t, const std::filesystem::path& path);

Tensor to_tensor(const RasterF32& r);   // dims {H,W,C}, f32
Tensor to_tensor(const InstanceMap& m); // dims {H,W}, u16; labels must fit
Tensor to_tensor(const SemanticMap& m); // dims {H,W}, u8

RasterF32 raster_from(const Tensor& t);    // accepts {H,W} or {H,W,C} f32
InstanceMap instance_from(const Tensor& t);
SemanticMap semantic_from(const Tensor& t);

// Convenience one-shot wrappers.
void write_raster(const RasterF32& r, const std::filesystem::path& path);
void write_instance(const InstanceMap& m, const std::filesystem::path& path);
void write_semantic(const SemanticMap& m, const std::filesystem::path& path);
RasterF32 read_raster(const std::filesystem::path& path);
InstanceMap read_instance(const std::filesystem::path& path);
SemanticMap read_semantic(const std::filesystem::path& path);

} // namespace panseg
