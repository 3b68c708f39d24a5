#include "panseg/augment/stain.hpp"

#include <cmath>

namespace panseg::augment {

namespace {

std::array<std::array<double, 3>, 3> invert3(const std::array<std::array<double, 3>, 3>& m) {
    double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                 m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                 m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    require(std::abs(det) > 1e-10, Errc::invalid_argument, "stain basis is singular");
    double inv = 1.0 / det;
    std::array<std::array<double, 3>, 3> r;
    r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv;
    r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv;
    r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv;
    r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv;
    r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv;
    r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv;
    r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv;
    r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv;
    r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv;
    return r;
}

} // namespace

StainBasis StainBasis::from_rows(const std::array<std::array<double, 3>, 3>& rows) {
    StainBasis b;
    for (int i = 0; i < 3; ++i) {
        double norm = std::sqrt(rows[i][0] * rows[i][0] + rows[i][1] * rows[i][1] +
                                rows[i][2] * rows[i][2]);
        require(norm > 0.0, Errc::invalid_argument, "stain basis row is zero");
        for (int j = 0; j < 3; ++j) b.od[i][j] = rows[i][j] / norm;
    }
    b.od_inv = invert3(b.od);
    return b;
}

StainBasis StainBasis::hed() {
    return from_rows({{{0.65, 0.70, 0.29}, {0.07, 0.99, 0.11}, {0.27, 0.57, 0.78}}});
}

RasterF32 rgb_to_hed(const RasterF32& rgb, const StainBasis& basis, float od_floor) {
    require(rgb.channels == 3, Errc::invalid_argument, "rgb_to_hed expects 3 channels");
    RasterF32 out(rgb.height, rgb.width, 3);
    for (std::size_t p = 0; p < rgb.pixel_count(); ++p) {
        const float* px = rgb.data.data() + p * 3;
        double od[3];
        for (int j = 0; j < 3; ++j) {
            double v = px[j] < od_floor ? od_floor : px[j];
            od[j] = -std::log(v);
        }
        float* o = out.data.data() + p * 3;
        for (int k = 0; k < 3; ++k)
            o[k] = static_cast<float>(od[0] * basis.od_inv[0][k] + od[1] * basis.od_inv[1][k] +
                                      od[2] * basis.od_inv[2][k]);
    }
    return out;
}

RasterF32 hed_to_rgb(const RasterF32& hed, const StainBasis& basis) {
    require(hed.channels == 3, Errc::invalid_argument, "hed_to_rgb expects 3 channels");
    RasterF32 out(hed.height, hed.width, 3);
    for (std::size_t p = 0; p < hed.pixel_count(); ++p) {
        const float* px = hed.data.data() + p * 3;
        float* o = out.data.data() + p * 3;
        for (int j = 0; j < 3; ++j) {
            double od = px[0] * basis.od[0][j] + px[1] * basis.od[1][j] + px[2] * basis.od[2][j];
            double v = std::exp(-od);
            o[j] = static_cast<float>(v > 1.0 ? 1.0 : v);
        }
    }
    return out;
}

RasterF32 scale_hed_channels(const RasterF32& rgb, const StainBasis& basis,
                             const std::array<float, 3>& scales) {
    RasterF32 hed = rgb_to_hed(rgb, basis);
    for (std::size_t p = 0; p < hed.pixel_count(); ++p)
        for (int k = 0; k < 3; ++k) hed.data[p * 3 + k] *= scales[k];
    return hed_to_rgb(hed, basis);
}

} // namespace panseg::augment
