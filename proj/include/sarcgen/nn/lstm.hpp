#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sarcgen/nn/params.hpp"

namespace sarcgen::nn {

inline float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

// Activations of one LSTM pass over a sequence, kept for backprop.
struct LstmCache {
    std::size_t steps = 0;
    std::size_t input_size = 0;
    std::size_t hidden = 0;
    std::vector<float> z;       // steps x (input + hidden): [x_t ; h_{t-1}]
    std::vector<float> gates;   // steps x 4H, post-activation, order i f g o
    std::vector<float> c;       // (steps + 1) x H, c[0] is the initial cell
    std::vector<float> h;       // (steps + 1) x H, h[0] is the initial state
    std::vector<float> tanh_c;  // steps x H

    std::span<const float> output(std::size_t t) const { return {h.data() + (t + 1) * hidden, hidden}; }
    std::span<const float> final_h() const { return {h.data() + steps * hidden, hidden}; }
    std::span<const float> final_c() const { return {c.data() + steps * hidden, hidden}; }
    // All outputs h_1..h_T, contiguous.
    std::span<const float> outputs() const { return {h.data() + hidden, steps * hidden}; }
};

// Single-layer LSTM: W is 4H x (I + H), b is 4H.
class Lstm {
public:
    Lstm() = default;
    Lstm(ParameterSet& params, const std::string& name, std::size_t input_size, std::size_t hidden);

    std::size_t input_size() const { return input_; }
    std::size_t hidden() const { return hidden_; }

    // Sets the forget-gate bias, which otherwise starts with the uniform init.
    void init_forget_bias(ParameterSet& params, float value) const;

    // inputs is steps x I. Empty h0/c0 mean zeros.
    void forward(const ParameterSet& params, std::span<const float> inputs, std::size_t steps,
                 std::span<const float> h0, std::span<const float> c0, LstmCache& cache) const;

    // dh is steps x H (gradient on each output; may be empty), dh_final and
    // dc_final are extra gradients on the final state (may be empty).
    // Writes dx (steps x I, may be empty to skip) and dh0/dc0 (may be empty).
    void backward(ParameterSet& params, const LstmCache& cache, std::span<const float> dh,
                  std::span<const float> dh_final, std::span<const float> dc_final,
                  std::span<float> dx, std::span<float> dh0, std::span<float> dc0) const;

    // One inference step; h and c are updated in place.
    void step(const ParameterSet& params, std::span<const float> x, std::span<float> h, std::span<float> c) const;

private:
    ParamId w_ = 0;
    ParamId b_ = 0;
    std::size_t input_ = 0;
    std::size_t hidden_ = 0;
};

// Stacked LSTM with per-layer caches.
class StackedLstm {
public:
    StackedLstm() = default;
    StackedLstm(ParameterSet& params, const std::string& name, std::size_t input_size, std::size_t hidden,
                std::size_t layers);

    std::size_t layers() const { return layers_.size(); }
    std::size_t hidden() const { return layers_.empty() ? 0 : layers_.front().hidden(); }
    const Lstm& layer(std::size_t i) const { return layers_[i]; }
    void init_forget_bias(ParameterSet& params, float value) const;

    // h0/c0 are layers x H (empty for zeros).
    void forward(const ParameterSet& params, std::span<const float> inputs, std::size_t steps,
                 std::span<const float> h0, std::span<const float> c0, std::vector<LstmCache>& caches) const;

    // dh_top is steps x H for the top layer outputs; dh_final/dc_final are
    // layers x H (may be empty). dh0/dc0 are layers x H outputs (may be empty).
    void backward(ParameterSet& params, const std::vector<LstmCache>& caches, std::span<const float> dh_top,
                  std::span<const float> dh_final, std::span<const float> dc_final, std::span<float> dx,
                  std::span<float> dh0, std::span<float> dc0) const;

private:
    std::vector<Lstm> layers_;
};

}  // namespace sarcgen::nn
