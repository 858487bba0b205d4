#include "sarcgen/simd/kernels.hpp"

#include "reduce.hpp"

#if defined(__ARM_NEON) || defined(__aarch64__)
#include <arm_neon.h>
#define SARCGEN_HAVE_NEON_TU 1
#endif

namespace sarcgen::simd {

#if defined(SARCGEN_HAVE_NEON_TU)
namespace {

// Two 4-wide registers stand in for the 8 reference lanes. vmlaq is avoided
// because it may fuse.
float dot_neon(const float* a, const float* b, std::size_t n) {
    float32x4_t lo = vdupq_n_f32(0.0f);
    float32x4_t hi = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        lo = vaddq_f32(lo, vmulq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
        hi = vaddq_f32(hi, vmulq_f32(vld1q_f32(a + i + 4), vld1q_f32(b + i + 4)));
    }
    float lanes[kLanes];
    vst1q_f32(lanes, lo);
    vst1q_f32(lanes + 4, hi);
    float s = detail::reduce_lanes(lanes);
    for (; i < n; ++i) {
        const float p = a[i] * b[i];
        s = s + p;
    }
    return s;
}

void axpy_neon(float alpha, const float* x, float* y, std::size_t n) {
    const float32x4_t va = vdupq_n_f32(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        vst1q_f32(y + i, vaddq_f32(vld1q_f32(y + i), vmulq_f32(va, vld1q_f32(x + i))));
    }
    for (; i < n; ++i) {
        const float p = alpha * x[i];
        y[i] = y[i] + p;
    }
}

void scale_neon(const float* x, float s, float* y, std::size_t n) {
    const float32x4_t vs = vdupq_n_f32(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(y + i, vmulq_f32(vld1q_f32(x + i), vs));
    for (; i < n; ++i) y[i] = x[i] * s;
}

void mul_acc_neon(const float* a, const float* b, float* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        vst1q_f32(y + i, vaddq_f32(vld1q_f32(y + i), vmulq_f32(vld1q_f32(a + i), vld1q_f32(b + i))));
    }
    for (; i < n; ++i) {
        const float p = a[i] * b[i];
        y[i] = y[i] + p;
    }
}

}  // namespace

const KernelTable* neon_kernels() {
    static const KernelTable table{"neon", dot_neon, axpy_neon, scale_neon, mul_acc_neon};
    return &table;
}

#else

const KernelTable* neon_kernels() { return nullptr; }

#endif

}  // namespace sarcgen::simd
