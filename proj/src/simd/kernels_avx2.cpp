#include "sarcgen/simd/kernels.hpp"

#include "reduce.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define SARCGEN_HAVE_AVX2_TU 1
#endif

namespace sarcgen::simd {

#if defined(SARCGEN_HAVE_AVX2_TU)
namespace {

// mul and add stay separate instructions: an FMA would round once and break
// equality with the scalar reference.
__attribute__((target("avx2"))) float dot_avx2(const float* a, const float* b, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256 p = _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
        acc = _mm256_add_ps(acc, p);
    }
    alignas(32) float lanes[kLanes];
    _mm256_store_ps(lanes, acc);
    float s = detail::reduce_lanes(lanes);
    for (; i < n; ++i) {
        const float p = a[i] * b[i];
        s = s + p;
    }
    return s;
}

__attribute__((target("avx2"))) void axpy_avx2(float alpha, const float* x, float* y, std::size_t n) {
    const __m256 va = _mm256_set1_ps(alpha);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256 p = _mm256_mul_ps(va, _mm256_loadu_ps(x + i));
        _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), p));
    }
    for (; i < n; ++i) {
        const float p = alpha * x[i];
        y[i] = y[i] + p;
    }
}

__attribute__((target("avx2"))) void scale_avx2(const float* x, float s, float* y, std::size_t n) {
    const __m256 vs = _mm256_set1_ps(s);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        _mm256_storeu_ps(y + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), vs));
    }
    for (; i < n; ++i) y[i] = x[i] * s;
}

__attribute__((target("avx2"))) void mul_acc_avx2(const float* a, const float* b, float* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256 p = _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
        _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), p));
    }
    for (; i < n; ++i) {
        const float p = a[i] * b[i];
        y[i] = y[i] + p;
    }
}

}  // namespace

const KernelTable* avx2_kernels() {
    static const KernelTable table{"avx2", dot_avx2, axpy_avx2, scale_avx2, mul_acc_avx2};
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? &table : nullptr;
}

#else

const KernelTable* avx2_kernels() { return nullptr; }

#endif

}  // namespace sarcgen::simd
