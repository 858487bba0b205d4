#include <cstdlib>
#include <string_view>

#include "sarcgen/simd/kernels.hpp"

namespace sarcgen::simd {
namespace {

const KernelTable& select() {
    const char* forced = std::getenv("SARCGEN_SIMD");
    if (forced != nullptr) {
        const std::string_view want{forced};
        if (want == "scalar") return scalar_kernels();
        if (want == "avx2" && avx2_kernels() != nullptr) return *avx2_kernels();
        if (want == "neon" && neon_kernels() != nullptr) return *neon_kernels();
    }
    if (const auto* k = avx2_kernels()) return *k;
    if (const auto* k = neon_kernels()) return *k;
    return scalar_kernels();
}

}  // namespace

const KernelTable& active() {
    static const KernelTable& table = select();
    return table;
}

void matvec(std::span<const float> w, std::size_t rows, std::size_t cols,
            std::span<const float> x, std::span<const float> bias, std::span<float> y) {
    const auto& k = active();
    for (std::size_t r = 0; r < rows; ++r) {
        const float d = k.dot(w.data() + r * cols, x.data(), cols);
        y[r] = bias.empty() ? d : d + bias[r];
    }
}

void matvec_t_acc(std::span<const float> w, std::size_t rows, std::size_t cols,
                  std::span<const float> g, std::span<float> x_grad) {
    const auto& k = active();
    for (std::size_t r = 0; r < rows; ++r) {
        if (g[r] == 0.0f) continue;
        k.axpy(g[r], w.data() + r * cols, x_grad.data(), cols);
    }
}

void outer_acc(std::span<const float> g, std::span<const float> x, std::span<float> dw) {
    const auto& k = active();
    const std::size_t cols = x.size();
    for (std::size_t r = 0; r < g.size(); ++r) {
        if (g[r] == 0.0f) continue;
        k.axpy(g[r], x.data(), dw.data() + r * cols, cols);
    }
}

}  // namespace sarcgen::simd
