#include "sarcgen/simd/kernels.hpp"

#include "reduce.hpp"

namespace sarcgen::simd {
namespace {

float dot_scalar(const float* a, const float* b, std::size_t n) {
    float acc[kLanes] = {};
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        for (std::size_t l = 0; l < kLanes; ++l) {
            const float p = a[i + l] * b[i + l];
            acc[l] = acc[l] + p;
        }
    }
    float s = detail::reduce_lanes(acc);
    for (; i < n; ++i) {
        const float p = a[i] * b[i];
        s = s + p;
    }
    return s;
}

void axpy_scalar(float alpha, const float* x, float* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const float p = alpha * x[i];
        y[i] = y[i] + p;
    }
}

void scale_scalar(const float* x, float s, float* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] * s;
}

void mul_acc_scalar(const float* a, const float* b, float* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const float p = a[i] * b[i];
        y[i] = y[i] + p;
    }
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{"scalar", dot_scalar, axpy_scalar, scale_scalar, mul_acc_scalar};
    return table;
}

}  // namespace sarcgen::simd
