#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace sarcgen::nn {

// Seeded generator whose draws depend only on std::mt19937_64's
// standardized output, never on library distribution objects.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    float uniform(float lo, float hi) {
        const float u = static_cast<float>(engine_() >> 40) * 0x1.0p-24f;
        return lo + (hi - lo) * u;
    }
    std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(engine_() % n); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 engine_;
};

struct Tensor {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> value;
    std::vector<float> grad;

    std::size_t size() const { return value.size(); }
    std::span<float> row(std::size_t r) { return {value.data() + r * cols, cols}; }
    std::span<const float> row(std::size_t r) const { return {value.data() + r * cols, cols}; }
    std::span<float> grad_row(std::size_t r) { return {grad.data() + r * cols, cols}; }
};

using ParamId = std::size_t;

// Owns every trainable tensor of a model. Layers refer to tensors by id.
class ParameterSet {
public:
    ParamId add(std::string name, std::size_t rows, std::size_t cols);

    Tensor& operator[](ParamId id) { return tensors_[id]; }
    const Tensor& operator[](ParamId id) const { return tensors_[id]; }
    std::size_t count() const { return tensors_.size(); }
    std::size_t total_size() const;

    void init_uniform(Rng& rng, float scale);
    void zero_grad();
    void scale_grad(float s);
    // Rescales gradients so their global L2 norm is at most max_norm.
    float clip_grad_norm(float max_norm);

    std::vector<std::vector<float>> snapshot() const;
    void restore(const std::vector<std::vector<float>>& values);

    // Binary blob: "SGCK", u32 version, u32 tensor count, then per tensor
    // u32 name length, name bytes, u64 rows, u64 cols, little-endian f32 data.
    void save(const std::filesystem::path& path) const;
    // Loads into an already-shaped set; names and shapes must match.
    void load(const std::filesystem::path& path);

private:
    std::deque<Tensor> tensors_;
};

class Adam {
public:
    struct Options {
        float learning_rate = 1e-3f;
        float beta1 = 0.9f;
        float beta2 = 0.999f;
        float epsilon = 1e-8f;
    };

    Adam(const ParameterSet& params, Options options);
    void step(ParameterSet& params);

private:
    Options options_;
    std::vector<std::vector<float>> m_;
    std::vector<std::vector<float>> v_;
    std::uint64_t t_ = 0;
};

}  // namespace sarcgen::nn
