#include "sarcgen/nn/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "sarcgen/errors.hpp"
#include "sarcgen/simd/kernels.hpp"

namespace sarcgen::nn {
namespace {

constexpr char kMagic[4] = {'S', 'G', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw CheckpointError("truncated checkpoint");
    return v;
}

}  // namespace

ParamId ParameterSet::add(std::string name, std::size_t rows, std::size_t cols) {
    Tensor t;
    t.name = std::move(name);
    t.rows = rows;
    t.cols = cols;
    t.value.assign(rows * cols, 0.0f);
    t.grad.assign(rows * cols, 0.0f);
    tensors_.push_back(std::move(t));
    return tensors_.size() - 1;
}

std::size_t ParameterSet::total_size() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
}

void ParameterSet::init_uniform(Rng& rng, float scale) {
    for (auto& t : tensors_) {
        for (auto& v : t.value) v = rng.uniform(-scale, scale);
    }
}

void ParameterSet::zero_grad() {
    for (auto& t : tensors_) std::fill(t.grad.begin(), t.grad.end(), 0.0f);
}

void ParameterSet::scale_grad(float s) {
    const auto& k = simd::active();
    for (auto& t : tensors_) k.scale(t.grad.data(), s, t.grad.data(), t.grad.size());
}

float ParameterSet::clip_grad_norm(float max_norm) {
    double sq = 0.0;
    for (const auto& t : tensors_) sq += simd::dot(t.grad, t.grad);
    const float norm = static_cast<float>(std::sqrt(sq));
    if (norm > max_norm && norm > 0.0f) scale_grad(max_norm / norm);
    return norm;
}

std::vector<std::vector<float>> ParameterSet::snapshot() const {
    std::vector<std::vector<float>> out;
    out.reserve(tensors_.size());
    for (const auto& t : tensors_) out.push_back(t.value);
    return out;
}

void ParameterSet::restore(const std::vector<std::vector<float>>& values) {
    if (values.size() != tensors_.size()) throw ShapeError("snapshot tensor count mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i].size() != tensors_[i].size()) throw ShapeError("snapshot tensor size mismatch");
        tensors_[i].value = values[i];
    }
}

void ParameterSet::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOError("cannot write checkpoint " + path.string());
    out.write(kMagic, 4);
    write_pod<std::uint32_t>(out, kVersion);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(tensors_.size()));
    for (const auto& t : tensors_) {
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        write_pod<std::uint64_t>(out, t.rows);
        write_pod<std::uint64_t>(out, t.cols);
        out.write(reinterpret_cast<const char*>(t.value.data()),
                  static_cast<std::streamsize>(t.value.size() * sizeof(float)));
    }
    if (!out) throw IOError("failed writing checkpoint " + path.string());
}

void ParameterSet::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open checkpoint " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw CheckpointError("bad checkpoint magic in " + path.string());
    const auto version = read_pod<std::uint32_t>(in);
    if (version != kVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    const auto count = read_pod<std::uint32_t>(in);
    if (count != tensors_.size()) throw CheckpointError("checkpoint tensor count mismatch");
    for (auto& t : tensors_) {
        const auto len = read_pod<std::uint32_t>(in);
        std::string name(len, '\0');
        in.read(name.data(), len);
        const auto rows = read_pod<std::uint64_t>(in);
        const auto cols = read_pod<std::uint64_t>(in);
        if (name != t.name || rows != t.rows || cols != t.cols) {
            throw CheckpointError("checkpoint tensor '" + name + "' does not match model tensor '" + t.name + "'");
        }
        in.read(reinterpret_cast<char*>(t.value.data()), static_cast<std::streamsize>(t.value.size() * sizeof(float)));
        if (!in) throw CheckpointError("truncated checkpoint data for " + name);
    }
}

Adam::Adam(const ParameterSet& params, Options options) : options_(options) {
    for (std::size_t i = 0; i < params.count(); ++i) {
        m_.emplace_back(params[i].size(), 0.0f);
        v_.emplace_back(params[i].size(), 0.0f);
    }
}

void Adam::step(ParameterSet& params) {
    ++t_;
    const double bc1 = 1.0 - std::pow(static_cast<double>(options_.beta1), static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(static_cast<double>(options_.beta2), static_cast<double>(t_));
    const float step = static_cast<float>(options_.learning_rate * std::sqrt(bc2) / bc1);
    const float b1 = options_.beta1;
    const float b2 = options_.beta2;
    for (std::size_t p = 0; p < params.count(); ++p) {
        auto& t = params[p];
        auto& m = m_[p];
        auto& v = v_[p];
        for (std::size_t i = 0; i < t.size(); ++i) {
            const float g = t.grad[i];
            m[i] = b1 * m[i] + (1.0f - b1) * g;
            v[i] = b2 * v[i] + (1.0f - b2) * g * g;
            t.value[i] -= step * m[i] / (std::sqrt(v[i]) + options_.epsilon);
        }
    }
}

}  // namespace sarcgen::nn
