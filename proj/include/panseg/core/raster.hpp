#pragma once

#include <cstdint>
#include <vector>

#include "panseg/core/error.hpp"

namespace panseg {

// Channel-last float raster: data[(y*width + x)*channels + c].
struct RasterF32 {
    int height = 0;
    int width = 0;
    int channels = 1;
    std::vector<float> data;

    RasterF32() = default;
    RasterF32(int h, int w, int c, float fill = 0.0f)
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * w * c, fill) {}

    float& at(int y, int x, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    float at(int y, int x, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    float* row(int y) { return data.data() + static_cast<std::size_t>(y) * width * channels; }
    const float* row(int y) const {
        return data.data() + static_cast<std::size_t>(y) * width * channels;
    }

    std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
    std::size_t size() const { return data.size(); }

    bool same_shape(const RasterF32& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }

    // Extracts channel c as a single-plane raster.
    RasterF32 plane(int c) const {
        RasterF32 out(height, width, 1);
        for (std::size_t p = 0; p < pixel_count(); ++p) out.data[p] = data[p * channels + c];
        return out;
    }
};

// Per-pixel instance identities, 0 = background. Labels need not be contiguous.
struct InstanceMap {
    int height = 0;
    int width = 0;
    std::vector<std::int32_t> labels;

    InstanceMap() = default;
    InstanceMap(int h, int w) : height(h), width(w), labels(static_cast<std::size_t>(h) * w, 0) {}

    std::int32_t& at(int y, int x) { return labels[static_cast<std::size_t>(y) * width + x]; }
    std::int32_t at(int y, int x) const { return labels[static_cast<std::size_t>(y) * width + x]; }

    std::int32_t max_label() const {
        std::int32_t m = 0;
        for (std::int32_t v : labels)
            if (v > m) m = v;
        return m;
    }
};

// Per-pixel class indices in [0, C), 0 = background.
struct SemanticMap {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> classes;

    SemanticMap() = default;
    SemanticMap(int h, int w) : height(h), width(w), classes(static_cast<std::size_t>(h) * w, 0) {}

    std::uint8_t& at(int y, int x) { return classes[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const {
        return classes[static_cast<std::size_t>(y) * width + x];
    }
};

struct Pixel {
    int y = 0;
    int x = 0;
};

struct Region {
    std::int32_t label = 0;
    std::vector<Pixel> pixels;
    int y0 = 0, x0 = 0, y1 = 0, x1 = 0; // inclusive bounding box
};

// Collects the pixels of every positive label, sorted by label ascending.
std::vector<Region> instance_regions(const InstanceMap& inst);

} // namespace panseg
