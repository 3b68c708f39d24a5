#include "panseg/core/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

static_assert(std::endian::native == std::endian::little,
              "tensor file I/O assumes a little-endian host");

namespace panseg {

namespace {

constexpr char kMagic[4] = {'N', 'T', 'N', 'S'};
// Sanity cap on payload size; anything above this is treated as a corrupt header.
constexpr std::uint64_t kMaxPayloadBytes = 1ull << 34;

void put_u32(std::ostream& os, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(b, 4);
}

std::uint32_t get_u32(std::istream& is, const std::filesystem::path& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        fail(Errc::truncated, "truncated tensor header: " + path.string());
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

} // namespace

std::size_t dtype_size(Dtype d) {
    switch (d) {
        case Dtype::u8: return 1;
        case Dtype::u16: return 2;
        case Dtype::f32: return 4;
    }
    fail(Errc::invalid_argument, "unknown dtype code");
}

std::size_t Tensor::element_count() const {
    std::uint64_t n = 1;
    for (std::uint32_t d : dims) n *= d;
    return static_cast<std::size_t>(n);
}

Tensor read_tensor(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(Errc::io, "cannot open tensor file: " + path.string());

    char magic[4];
    if (!is.read(magic, 4)) fail(Errc::truncated, "truncated tensor header: " + path.string());
    if (std::memcmp(magic, kMagic, 4) != 0)
        fail(Errc::bad_magic, "bad tensor magic in: " + path.string());

    std::uint32_t dtype_code = get_u32(is, path);
    if (dtype_code > 2) fail(Errc::invalid_argument, "unknown dtype code in: " + path.string());
    Tensor t;
    t.dtype = static_cast<Dtype>(dtype_code);

    std::uint32_t ndim = get_u32(is, path);
    if (ndim > 8) fail(Errc::dims_overflow, "implausible ndim in: " + path.string());
    t.dims.resize(ndim);
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < ndim; ++i) {
        t.dims[i] = get_u32(is, path);
        count *= t.dims[i];
        if (count > kMaxPayloadBytes)
            fail(Errc::dims_overflow, "tensor dims overflow in: " + path.string());
    }
    std::uint64_t payload = count * dtype_size(t.dtype);
    if (payload > kMaxPayloadBytes)
        fail(Errc::dims_overflow, "tensor dims overflow in: " + path.string());

    t.bytes.resize(static_cast<std::size_t>(payload));
    if (payload > 0 && !is.read(reinterpret_cast<char*>(t.bytes.data()),
                                static_cast<std::streamsize>(payload)))
        fail(Errc::truncated, "truncated tensor payload in: " + path.string());
    // A conforming file ends exactly after the payload.
    is.peek();
    if (!is.eof()) fail(Errc::io, "trailing bytes after tensor payload in: " + path.string());
    return t;
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) {
    if (t.element_count() * dtype_size(t.dtype) != t.bytes.size())
        fail(Errc::invalid_argument, "tensor payload size does not match dims");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) fail(Errc::io, "cannot write tensor file: " + path.string());
    os.write(kMagic, 4);
    put_u32(os, static_cast<std::uint32_t>(t.dtype));
    put_u32(os, static_cast<std::uint32_t>(t.dims.size()));
    for (std::uint32_t d : t.dims) put_u32(os, d);
    os.write(reinterpret_cast<const char*>(t.bytes.data()),
             static_cast<std::streamsize>(t.bytes.size()));
    if (!os) fail(Errc::io, "write failed: " + path.string());
}

Tensor to_tensor(const RasterF32& r) {
    Tensor t;
    t.dtype = Dtype::f32;
    t.dims = {static_cast<std::uint32_t>(r.height), static_cast<std::uint32_t>(r.width),
              static_cast<std::uint32_t>(r.channels)};
    t.bytes.resize(r.data.size() * 4);
    std::memcpy(t.bytes.data(), r.data.data(), t.bytes.size());
    return t;
}

Tensor to_tensor(const InstanceMap& m) {
    Tensor t;
    t.dtype = Dtype::u16;
    t.dims = {static_cast<std::uint32_t>(m.height), static_cast<std::uint32_t>(m.width)};
    t.bytes.resize(m.labels.size() * 2);
    auto* out = reinterpret_cast<std::uint16_t*>(t.bytes.data());
    for (std::size_t i = 0; i < m.labels.size(); ++i) {
        std::int32_t v = m.labels[i];
        if (v < 0 || v > std::numeric_limits<std::uint16_t>::max())
            fail(Errc::invalid_argument, "instance label out of u16 range");
        out[i] = static_cast<std::uint16_t>(v);
    }
    return t;
}

Tensor to_tensor(const SemanticMap& m) {
    Tensor t;
    t.dtype = Dtype::u8;
    t.dims = {static_cast<std::uint32_t>(m.height), static_cast<std::uint32_t>(m.width)};
    t.bytes.assign(m.classes.begin(), m.classes.end());
    return t;
}

namespace {
void check_rank(const Tensor& t, std::size_t lo, std::size_t hi, const char* what) {
    if (t.dims.size() < lo || t.dims.size() > hi)
        fail(Errc::invalid_argument, std::string("unexpected tensor rank for ") + what);
}
} // namespace

RasterF32 raster_from(const Tensor& t) {
    check_rank(t, 2, 3, "raster");
    if (t.dtype != Dtype::f32) fail(Errc::invalid_argument, "raster tensor must be f32");
    int h = static_cast<int>(t.dims[0]);
    int w = static_cast<int>(t.dims[1]);
    int c = t.dims.size() == 3 ? static_cast<int>(t.dims[2]) : 1;
    RasterF32 r(h, w, c);
    std::memcpy(r.data.data(), t.bytes.data(), t.bytes.size());
    return r;
}

InstanceMap instance_from(const Tensor& t) {
    check_rank(t, 2, 2, "instance map");
    if (t.dtype != Dtype::u16) fail(Errc::invalid_argument, "instance tensor must be u16");
    InstanceMap m(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]));
    const auto* in = reinterpret_cast<const std::uint16_t*>(t.bytes.data());
    for (std::size_t i = 0; i < m.labels.size(); ++i) m.labels[i] = in[i];
    return m;
}

SemanticMap semantic_from(const Tensor& t) {
    check_rank(t, 2, 2, "semantic map");
    if (t.dtype != Dtype::u8) fail(Errc::invalid_argument, "semantic tensor must be u8");
    SemanticMap m(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]));
    std::memcpy(m.classes.data(), t.bytes.data(), t.bytes.size());
    return m;
}

void write_raster(const RasterF32& r, const std::filesystem::path& path) {
    write_tensor(to_tensor(r), path);
}
void write_instance(const InstanceMap& m, const std::filesystem::path& path) {
    write_tensor(to_tensor(m), path);
}
void write_semantic(const SemanticMap& m, const std::filesystem::path& path) {
    write_tensor(to_tensor(m), path);
}
RasterF32 read_raster(const std::filesystem::path& path) { return raster_from(read_tensor(path)); }
InstanceMap read_instance(const std::filesystem::path& path) {
    return instance_from(read_tensor(path));
}
SemanticMap read_semantic(const std::filesystem::path& path) {
    return semantic_from(read_tensor(path));
}

} // namespace panseg
