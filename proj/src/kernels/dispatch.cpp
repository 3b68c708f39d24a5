#include "panseg/kernels/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace panseg::kernels {

namespace {

struct Table {
    float (*dot)(const float*, const float*, std::size_t);
    void (*axpy)(float, const float*, float*, std::size_t);
    void (*scale)(float*, float, std::size_t);
    float (*sum)(const float*, std::size_t);
    float (*max_value)(const float*, std::size_t);
    float (*squared_distance)(const float*, const float*, std::size_t);
    void (*adamw_step)(float*, const float*, float*, float*, std::size_t, float, float, float,
                       float, float, float, float);
    Backend backend;
};

constexpr Table kScalar = {
    scalar::dot,    scalar::axpy,             scalar::scale,      scalar::sum,
    scalar::max_value, scalar::squared_distance, scalar::adamw_step, Backend::scalar,
};

#if defined(PANSEG_WITH_AVX2)
constexpr Table kAvx2 = {
    avx2::dot,    avx2::axpy,             avx2::scale,      avx2::sum,
    avx2::max_value, avx2::squared_distance, avx2::adamw_step, Backend::avx2,
};
#endif

bool cpu_has_avx2() {
#if defined(PANSEG_WITH_AVX2) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Table* detect() {
    const char* env = std::getenv("PANSEG_SIMD");
    if (env != nullptr) {
        if (std::strcmp(env, "scalar") == 0) return &kScalar;
#if defined(PANSEG_WITH_AVX2)
        if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) return &kAvx2;
#endif
        // "auto" and anything unrecognized fall through to detection
    }
#if defined(PANSEG_WITH_AVX2)
    if (cpu_has_avx2()) return &kAvx2;
#endif
    return &kScalar;
}

std::atomic<const Table*> g_table{nullptr};

const Table& table() {
    const Table* t = g_table.load(std::memory_order_acquire);
    if (t == nullptr) {
        t = detect();
        g_table.store(t, std::memory_order_release);
    }
    return *t;
}

} // namespace

Backend active_backend() { return table().backend; }

const char* backend_name() {
    return table().backend == Backend::avx2 ? "avx2" : "scalar";
}

bool avx2_available() { return cpu_has_avx2(); }

void force_backend(Backend b) {
    if (b == Backend::scalar) {
        g_table.store(&kScalar, std::memory_order_release);
        return;
    }
#if defined(PANSEG_WITH_AVX2)
    if (b == Backend::avx2 && cpu_has_avx2()) {
        g_table.store(&kAvx2, std::memory_order_release);
        return;
    }
#endif
    g_table.store(&kScalar, std::memory_order_release);
}

void reset_backend() { g_table.store(detect(), std::memory_order_release); }

float dot(const float* a, const float* b, std::size_t n) { return table().dot(a, b, n); }
void axpy(float alpha, const float* x, float* y, std::size_t n) { table().axpy(alpha, x, y, n); }
void scale(float* x, float alpha, std::size_t n) { table().scale(x, alpha, n); }
float sum(const float* x, std::size_t n) { return table().sum(x, n); }
float max_value(const float* x, std::size_t n) { return table().max_value(x, n); }
float squared_distance(const float* a, const float* b, std::size_t n) {
    return table().squared_distance(a, b, n);
}
void adamw_step(float* p, const float* g, float* m, float* v, std::size_t n, float beta1,
                float beta2, float eps, float lr, float weight_decay, float inv_bias1,
                float inv_bias2) {
    table().adamw_step(p, g, m, v, n, beta1, beta2, eps, lr, weight_decay, inv_bias1, inv_bias2);
}

} // namespace panseg::kernels
