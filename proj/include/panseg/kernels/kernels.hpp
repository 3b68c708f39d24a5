#pragma once

#include <cstddef>

// Float kernels behind the arithmetic inner loops (convolutions, losses,
// optimizer updates, prediction averaging). Every kernel has a scalar
// reference implementation and, on x86-64, an AVX2 variant; the active
// variant is picked once at runtime from CPU capabilities. Elementwise
// kernels are bit-identical across variants (both use fused multiply-add);
// reductions may differ by association order and are equivalence-tested
// against a double-precision reference.
namespace panseg::kernels {

enum class Backend { scalar, avx2 };

// Backend in use. Auto-detected on first call; PANSEG_SIMD=scalar|avx2|auto
// overrides detection, force_backend() overrides everything (tests).
Backend active_backend();
const char* backend_name();
void force_backend(Backend b);
void reset_backend();
bool avx2_available();

float dot(const float* a, const float* b, std::size_t n);
void axpy(float alpha, const float* x, float* y, std::size_t n); // y += alpha*x
void scale(float* x, float alpha, std::size_t n);                // x *= alpha
float sum(const float* x, std::size_t n);
float max_value(const float* x, std::size_t n); // -inf for n == 0
float squared_distance(const float* a, const float* b, std::size_t n);

// One AdamW element-wise step over n parameters:
//   m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2
//   p <- p - lr*( (m*inv_bias1) / (sqrt(v*inv_bias2) + eps) + wd*p )
void adamw_step(float* p, const float* g, float* m, float* v, std::size_t n,
                float beta1, float beta2, float eps, float lr, float weight_decay,
                float inv_bias1, float inv_bias2);

namespace scalar {
float dot(const float* a, const float* b, std::size_t n);
void axpy(float alpha, const float* x, float* y, std::size_t n);
void scale(float* x, float alpha, std::size_t n);
float sum(const float* x, std::size_t n);
float max_value(const float* x, std::size_t n);
float squared_distance(const float* a, const float* b, std::size_t n);
void adamw_step(float* p, const float* g, float* m, float* v, std::size_t n,
                float beta1, float beta2, float eps, float lr, float weight_decay,
                float inv_bias1, float inv_bias2);
} // namespace scalar

#if defined(PANSEG_WITH_AVX2)
namespace avx2 {
float dot(const float* a, const float* b, std::size_t n);
void axpy(float alpha, const float* x, float* y, std::size_t n);
void scale(float* x, float alpha, std::size_t n);
float sum(const float* x, std::size_t n);
float max_value(const float* x, std::size_t n);
float squared_distance(const float* a, const float* b, std::size_t n);
void adamw_step(float* p, const float* g, float* m, float* v, std::size_t n,
                float beta1, float beta2, float eps, float lr, float weight_decay,
                float inv_bias1, float inv_bias2);
} // namespace avx2
#endif

} // namespace panseg::kernels
