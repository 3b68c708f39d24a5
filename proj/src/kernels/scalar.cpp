#include "panseg/kernels/kernels.hpp"

#include <cmath>
#include <limits>

// Reference kernels. std::fma keeps the elementwise ops rounding-identical
// to the AVX2 fused variants.
namespace panseg::kernels::scalar {

float dot(const float* a, const float* b, std::size_t n) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < n; ++i) acc = std::fma(a[i], b[i], acc);
    return acc;
}

void axpy(float alpha, const float* x, float* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void scale(float* x, float alpha, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

float sum(const float* x, std::size_t n) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

float max_value(const float* x, std::size_t n) {
    float m = -std::numeric_limits<float>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] > m) m = x[i];
    return m;
}

float squared_distance(const float* a, const float* b, std::size_t n) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < n; ++i) {
        float d = a[i] - b[i];
        acc = std::fma(d, d, acc);
    }
    return acc;
}

void adamw_step(float* p, const float* g, float* m, float* v, std::size_t n,
                float beta1, float beta2, float eps, float lr, float weight_decay,
                float inv_bias1, float inv_bias2) {
    const float omb1 = 1.0f - beta1;
    const float omb2 = 1.0f - beta2;
    for (std::size_t i = 0; i < n; ++i) {
        float gi = g[i];
        m[i] = std::fma(beta1, m[i], omb1 * gi);
        v[i] = std::fma(beta2, v[i], omb2 * (gi * gi));
        float mhat = m[i] * inv_bias1;
        float vhat = v[i] * inv_bias2;
        float update = std::fma(weight_decay, p[i], mhat / (std::sqrt(vhat) + eps));
        p[i] = std::fma(-lr, update, p[i]);
    }
}

} // namespace panseg::kernels::scalar
