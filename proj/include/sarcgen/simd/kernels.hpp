#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace sarcgen::simd {

// Dense float kernels used by the recurrent models.
//
// Every variant accumulates dot products in 8 interleaved lanes, reduces the
// lanes with the same pairwise tree, then adds the tail sequentially. The
// scalar reference follows that order exactly, so all variants are
// bit-identical (the build disables FP contraction).
inline constexpr std::size_t kLanes = 8;

struct KernelTable {
    std::string_view name;
    float (*dot)(const float* a, const float* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(float alpha, const float* x, float* y, std::size_t n);
    // y = x * s
    void (*scale)(const float* x, float s, float* y, std::size_t n);
    // y[i] += a[i] * b[i]
    void (*mul_acc)(const float* a, const float* b, float* y, std::size_t n);
};

const KernelTable& scalar_kernels();
// nullptr when the variant is not compiled in or the CPU lacks the feature.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

// The table chosen at first use: SARCGEN_SIMD=scalar|avx2|neon forces a
// variant, otherwise the widest supported one wins.
const KernelTable& active();

inline float dot(std::span<const float> a, std::span<const float> b) {
    return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(float alpha, std::span<const float> x, std::span<float> y) {
    active().axpy(alpha, x.data(), y.data(), x.size());
}

// y[r] = W[r,:] . x + bias[r] for a row-major rows x cols matrix.
void matvec(std::span<const float> w, std::size_t rows, std::size_t cols,
            std::span<const float> x, std::span<const float> bias, std::span<float> y);

// x_grad += W^T g
void matvec_t_acc(std::span<const float> w, std::size_t rows, std::size_t cols,
                  std::span<const float> g, std::span<float> x_grad);

// dW += g x^T
void outer_acc(std::span<const float> g, std::span<const float> x, std::span<float> dw);

}  // namespace sarcgen::simd
