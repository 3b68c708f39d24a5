#include "panseg/kernels/kernels.hpp"

#if defined(PANSEG_WITH_AVX2)

#include <immintrin.h>

#include <cmath>
#include <limits>

namespace panseg::kernels::avx2 {

namespace {

inline float hsum256(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 sh = _mm_movehl_ps(lo, lo);
    lo = _mm_add_ps(lo, sh);
    sh = _mm_shuffle_ps(lo, lo, 0x1);
    lo = _mm_add_ss(lo, sh);
    return _mm_cvtss_f32(lo);
}

inline float hmax256(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_max_ps(lo, hi);
    __m128 sh = _mm_movehl_ps(lo, lo);
    lo = _mm_max_ps(lo, sh);
    sh = _mm_shuffle_ps(lo, lo, 0x1);
    lo = _mm_max_ss(lo, sh);
    return _mm_cvtss_f32(lo);
}

} // namespace

float dot(const float* a, const float* b, std::size_t n) {
    std::size_t i = 0;
    __m256 acc = _mm256_setzero_ps();
    for (; i + 8 <= n; i += 8)
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc);
    float r = hsum256(acc);
    for (; i < n; ++i) r = std::fma(a[i], b[i], r);
    return r;
}

void axpy(float alpha, const float* x, float* y, std::size_t n) {
    std::size_t i = 0;
    __m256 va = _mm256_set1_ps(alpha);
    for (; i + 8 <= n; i += 8) {
        __m256 r = _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i));
        _mm256_storeu_ps(y + i, r);
    }
    for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void scale(float* x, float alpha, std::size_t n) {
    std::size_t i = 0;
    __m256 va = _mm256_set1_ps(alpha);
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(x + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), va));
    for (; i < n; ++i) x[i] *= alpha;
}

float sum(const float* x, std::size_t n) {
    std::size_t i = 0;
    __m256 acc = _mm256_setzero_ps();
    for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
    float r = hsum256(acc);
    for (; i < n; ++i) r += x[i];
    return r;
}

float max_value(const float* x, std::size_t n) {
    std::size_t i = 0;
    float r = -std::numeric_limits<float>::infinity();
    if (n >= 8) {
        __m256 acc = _mm256_loadu_ps(x);
        for (i = 8; i + 8 <= n; i += 8) acc = _mm256_max_ps(acc, _mm256_loadu_ps(x + i));
        r = hmax256(acc);
    }
    for (; i < n; ++i)
        if (x[i] > r) r = x[i];
    return r;
}

float squared_distance(const float* a, const float* b, std::size_t n) {
    std::size_t i = 0;
    __m256 acc = _mm256_setzero_ps();
    for (; i + 8 <= n; i += 8) {
        __m256 d = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
        acc = _mm256_fmadd_ps(d, d, acc);
    }
    float r = hsum256(acc);
    for (; i < n; ++i) {
        float d = a[i] - b[i];
        r = std::fma(d, d, r);
    }
    return r;
}

void adamw_step(float* p, const float* g, float* m, float* v, std::size_t n,
                float beta1, float beta2, float eps, float lr, float weight_decay,
                float inv_bias1, float inv_bias2) {
    const __m256 vb1 = _mm256_set1_ps(beta1);
    const __m256 vb2 = _mm256_set1_ps(beta2);
    const __m256 vomb1 = _mm256_set1_ps(1.0f - beta1);
    const __m256 vomb2 = _mm256_set1_ps(1.0f - beta2);
    const __m256 veps = _mm256_set1_ps(eps);
    const __m256 vlr = _mm256_set1_ps(lr);
    const __m256 vwd = _mm256_set1_ps(weight_decay);
    const __m256 vib1 = _mm256_set1_ps(inv_bias1);
    const __m256 vib2 = _mm256_set1_ps(inv_bias2);

    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 gi = _mm256_loadu_ps(g + i);
        __m256 mi = _mm256_fmadd_ps(vb1, _mm256_loadu_ps(m + i), _mm256_mul_ps(vomb1, gi));
        __m256 vi = _mm256_fmadd_ps(vb2, _mm256_loadu_ps(v + i),
                                    _mm256_mul_ps(vomb2, _mm256_mul_ps(gi, gi)));
        _mm256_storeu_ps(m + i, mi);
        _mm256_storeu_ps(v + i, vi);
        __m256 mhat = _mm256_mul_ps(mi, vib1);
        __m256 vhat = _mm256_mul_ps(vi, vib2);
        __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(vhat), veps);
        __m256 pi = _mm256_loadu_ps(p + i);
        __m256 update = _mm256_fmadd_ps(vwd, pi, _mm256_div_ps(mhat, denom));
        _mm256_storeu_ps(p + i, _mm256_fnmadd_ps(vlr, update, pi));
    }
    if (i < n)
        scalar::adamw_step(p + i, g + i, m + i, v + i, n - i, beta1, beta2, eps, lr,
                           weight_decay, inv_bias1, inv_bias2);
}

} // namespace panseg::kernels::avx2

#endif // PANSEG_WITH_AVX2
