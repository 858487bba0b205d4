#include "sarcgen/nn/lstm.hpp"

#include <algorithm>
#include <cstring>

#include "sarcgen/simd/kernels.hpp"

namespace sarcgen::nn {

Lstm::Lstm(ParameterSet& params, const std::string& name, std::size_t input_size, std::size_t hidden)
    : input_(input_size), hidden_(hidden) {
    w_ = params.add(name + ".weight", 4 * hidden, input_size + hidden);
    b_ = params.add(name + ".bias", 4 * hidden, 1);
}

void Lstm::init_forget_bias(ParameterSet& params, float value) const {
    auto& b = params[b_].value;
    std::fill(b.begin() + static_cast<std::ptrdiff_t>(hidden_), b.begin() + static_cast<std::ptrdiff_t>(2 * hidden_),
              value);
}

void Lstm::forward(const ParameterSet& params, std::span<const float> inputs, std::size_t steps,
                   std::span<const float> h0, std::span<const float> c0, LstmCache& cache) const {
    const std::size_t H = hidden_;
    const std::size_t I = input_;
    const std::size_t Z = I + H;
    cache.steps = steps;
    cache.input_size = I;
    cache.hidden = H;
    cache.z.resize(steps * Z);
    cache.gates.resize(steps * 4 * H);
    cache.c.assign((steps + 1) * H, 0.0f);
    cache.h.assign((steps + 1) * H, 0.0f);
    cache.tanh_c.resize(steps * H);
    if (!h0.empty()) std::copy(h0.begin(), h0.end(), cache.h.begin());
    if (!c0.empty()) std::copy(c0.begin(), c0.end(), cache.c.begin());

    const auto& w = params[w_].value;
    const auto& b = params[b_].value;
    for (std::size_t t = 0; t < steps; ++t) {
        float* z = cache.z.data() + t * Z;
        std::memcpy(z, inputs.data() + t * I, I * sizeof(float));
        std::memcpy(z + I, cache.h.data() + t * H, H * sizeof(float));
        std::span<float> g{cache.gates.data() + t * 4 * H, 4 * H};
        simd::matvec(w, 4 * H, Z, {z, Z}, b, g);
        const float* c_prev = cache.c.data() + t * H;
        float* c_t = cache.c.data() + (t + 1) * H;
        float* h_t = cache.h.data() + (t + 1) * H;
        float* tc = cache.tanh_c.data() + t * H;
        for (std::size_t j = 0; j < H; ++j) {
            const float ig = sigmoid(g[j]);
            const float fg = sigmoid(g[H + j]);
            const float gg = std::tanh(g[2 * H + j]);
            const float og = sigmoid(g[3 * H + j]);
            g[j] = ig;
            g[H + j] = fg;
            g[2 * H + j] = gg;
            g[3 * H + j] = og;
            c_t[j] = fg * c_prev[j] + ig * gg;
            tc[j] = std::tanh(c_t[j]);
            h_t[j] = og * tc[j];
        }
    }
}

void Lstm::backward(ParameterSet& params, const LstmCache& cache, std::span<const float> dh,
                    std::span<const float> dh_final, std::span<const float> dc_final, std::span<float> dx,
                    std::span<float> dh0, std::span<float> dc0) const {
    const std::size_t H = hidden_;
    const std::size_t I = input_;
    const std::size_t Z = I + H;
    const std::size_t steps = cache.steps;
    auto& W = params[w_];
    auto& B = params[b_];

    std::vector<float> dh_next(H, 0.0f);
    std::vector<float> dc_next(H, 0.0f);
    if (!dh_final.empty()) std::copy(dh_final.begin(), dh_final.end(), dh_next.begin());
    if (!dc_final.empty()) std::copy(dc_final.begin(), dc_final.end(), dc_next.begin());
    std::vector<float> dpre(4 * H);
    std::vector<float> dz(Z);

    for (std::size_t t = steps; t-- > 0;) {
        const float* g = cache.gates.data() + t * 4 * H;
        const float* c_prev = cache.c.data() + t * H;
        const float* tc = cache.tanh_c.data() + t * H;
        for (std::size_t j = 0; j < H; ++j) {
            const float ig = g[j];
            const float fg = g[H + j];
            const float gg = g[2 * H + j];
            const float og = g[3 * H + j];
            const float dh_t = dh_next[j] + (dh.empty() ? 0.0f : dh[t * H + j]);
            const float dc = dc_next[j] + dh_t * og * (1.0f - tc[j] * tc[j]);
            dpre[j] = dc * gg * ig * (1.0f - ig);
            dpre[H + j] = dc * c_prev[j] * fg * (1.0f - fg);
            dpre[2 * H + j] = dc * ig * (1.0f - gg * gg);
            dpre[3 * H + j] = dh_t * tc[j] * og * (1.0f - og);
            dc_next[j] = dc * fg;
        }
        simd::outer_acc(dpre, {cache.z.data() + t * Z, Z}, W.grad);
        simd::axpy(1.0f, dpre, B.grad);
        std::fill(dz.begin(), dz.end(), 0.0f);
        simd::matvec_t_acc(W.value, 4 * H, Z, dpre, dz);
        if (!dx.empty()) std::copy(dz.begin(), dz.begin() + static_cast<std::ptrdiff_t>(I), dx.begin() + static_cast<std::ptrdiff_t>(t * I));
        std::copy(dz.begin() + static_cast<std::ptrdiff_t>(I), dz.end(), dh_next.begin());
    }
    if (!dh0.empty()) std::copy(dh_next.begin(), dh_next.end(), dh0.begin());
    if (!dc0.empty()) std::copy(dc_next.begin(), dc_next.end(), dc0.begin());
}

void Lstm::step(const ParameterSet& params, std::span<const float> x, std::span<float> h, std::span<float> c) const {
    const std::size_t H = hidden_;
    const std::size_t I = input_;
    std::vector<float> z(I + H);
    std::copy(x.begin(), x.end(), z.begin());
    std::copy(h.begin(), h.end(), z.begin() + static_cast<std::ptrdiff_t>(I));
    std::vector<float> g(4 * H);
    simd::matvec(params[w_].value, 4 * H, I + H, z, params[b_].value, g);
    for (std::size_t j = 0; j < H; ++j) {
        const float ig = sigmoid(g[j]);
        const float fg = sigmoid(g[H + j]);
        const float gg = std::tanh(g[2 * H + j]);
        const float og = sigmoid(g[3 * H + j]);
        c[j] = fg * c[j] + ig * gg;
        h[j] = og * std::tanh(c[j]);
    }
}

StackedLstm::StackedLstm(ParameterSet& params, const std::string& name, std::size_t input_size, std::size_t hidden,
                         std::size_t layers) {
    for (std::size_t l = 0; l < layers; ++l) {
        layers_.emplace_back(params, name + ".l" + std::to_string(l), l == 0 ? input_size : hidden, hidden);
    }
}

void StackedLstm::init_forget_bias(ParameterSet& params, float value) const {
    for (const auto& l : layers_) l.init_forget_bias(params, value);
}

void StackedLstm::forward(const ParameterSet& params, std::span<const float> inputs, std::size_t steps,
                          std::span<const float> h0, std::span<const float> c0,
                          std::vector<LstmCache>& caches) const {
    const std::size_t H = hidden();
    caches.resize(layers_.size());
    std::span<const float> in = inputs;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto lh0 = h0.empty() ? std::span<const float>{} : h0.subspan(l * H, H);
        const auto lc0 = c0.empty() ? std::span<const float>{} : c0.subspan(l * H, H);
        layers_[l].forward(params, in, steps, lh0, lc0, caches[l]);
        in = caches[l].outputs();
    }
}

void StackedLstm::backward(ParameterSet& params, const std::vector<LstmCache>& caches,
                           std::span<const float> dh_top, std::span<const float> dh_final,
                           std::span<const float> dc_final, std::span<float> dx, std::span<float> dh0,
                           std::span<float> dc0) const {
    const std::size_t H = hidden();
    const std::size_t steps = caches.front().steps;
    std::vector<float> grad_out(dh_top.begin(), dh_top.end());
    std::vector<float> grad_in;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const auto lhf = dh_final.empty() ? std::span<const float>{} : dh_final.subspan(l * H, H);
        const auto lcf = dc_final.empty() ? std::span<const float>{} : dc_final.subspan(l * H, H);
        const auto lh0 = dh0.empty() ? std::span<float>{} : dh0.subspan(l * H, H);
        const auto lc0 = dc0.empty() ? std::span<float>{} : dc0.subspan(l * H, H);
        std::span<float> out_dx;
        if (l > 0) {
            grad_in.assign(steps * layers_[l].input_size(), 0.0f);
            out_dx = grad_in;
        } else {
            out_dx = dx;
        }
        layers_[l].backward(params, caches[l], grad_out, lhf, lcf, out_dx, lh0, lc0);
        if (l > 0) grad_out.swap(grad_in);
    }
}

}  // namespace sarcgen::nn
