#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "sarcgen/errors.hpp"
#include "sarcgen/nn/lstm.hpp"
#include "sarcgen/nn/params.hpp"
#include "sarcgen/nn/vocab.hpp"

using namespace sarcgen;
using namespace sarcgen::nn;

namespace {

// Loss = sum_t <probe_t, h_t> + <probe_final_c, c_T>, linear in the outputs so
// its gradient with respect to them is the probe itself.
struct Probe {
    std::vector<float> inputs;
    std::vector<float> dh;
    std::vector<float> dc_final;
};

double lstm_loss(const ParameterSet& params, const Lstm& lstm, const Probe& p, std::size_t steps,
                 std::span<const float> inputs) {
    LstmCache cache;
    lstm.forward(params, inputs, steps, {}, {}, cache);
    double loss = 0.0;
    const auto out = cache.outputs();
    for (std::size_t i = 0; i < out.size(); ++i) loss += static_cast<double>(out[i]) * p.dh[i];
    const auto c = cache.final_c();
    for (std::size_t i = 0; i < c.size(); ++i) loss += static_cast<double>(c[i]) * p.dc_final[i];
    return loss;
}

}  // namespace

TEST_CASE("LSTM backward matches central finite differences") {
    const std::size_t input = 3, hidden = 4, steps = 5;
    ParameterSet params;
    Lstm lstm(params, "lstm", input, hidden);
    Rng rng(5);
    params.init_uniform(rng, 0.5f);

    Probe p;
    for (std::size_t i = 0; i < steps * input; ++i) p.inputs.push_back(rng.uniform(-1, 1));
    for (std::size_t i = 0; i < steps * hidden; ++i) p.dh.push_back(rng.uniform(-1, 1));
    for (std::size_t i = 0; i < hidden; ++i) p.dc_final.push_back(rng.uniform(-1, 1));

    LstmCache cache;
    lstm.forward(params, p.inputs, steps, {}, {}, cache);
    params.zero_grad();
    std::vector<float> dx(steps * input, 0.0f);
    lstm.backward(params, cache, p.dh, {}, p.dc_final, dx, {}, {});

    const float h = 1e-2f;
    for (std::size_t t = 0; t < params.count(); ++t) {
        auto& tensor = params[t];
        for (std::size_t i = 0; i < tensor.size(); i += 3) {
            const float saved = tensor.value[i];
            tensor.value[i] = saved + h;
            const double up = lstm_loss(params, lstm, p, steps, p.inputs);
            tensor.value[i] = saved - h;
            const double down = lstm_loss(params, lstm, p, steps, p.inputs);
            tensor.value[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            CAPTURE(tensor.name);
            CAPTURE(i);
            CHECK(tensor.grad[i] == doctest::Approx(numeric).epsilon(2e-2).scale(1.0));
        }
    }
    for (std::size_t i = 0; i < dx.size(); ++i) {
        auto x = p.inputs;
        x[i] += h;
        const double up = lstm_loss(params, lstm, p, steps, x);
        x[i] -= 2 * h;
        const double down = lstm_loss(params, lstm, p, steps, x);
        CHECK(dx[i] == doctest::Approx((up - down) / (2.0 * h)).epsilon(2e-2).scale(1.0));
    }
}

TEST_CASE("stacked LSTM backward matches finite differences on the top outputs") {
    const std::size_t input = 2, hidden = 3, steps = 4, layers = 2;
    ParameterSet params;
    StackedLstm stack(params, "stack", input, hidden, layers);
    Rng rng(9);
    params.init_uniform(rng, 0.5f);
    std::vector<float> inputs, dh;
    for (std::size_t i = 0; i < steps * input; ++i) inputs.push_back(rng.uniform(-1, 1));
    for (std::size_t i = 0; i < steps * hidden; ++i) dh.push_back(rng.uniform(-1, 1));

    auto loss = [&] {
        std::vector<LstmCache> caches;
        stack.forward(params, inputs, steps, {}, {}, caches);
        const auto out = caches.back().outputs();
        double s = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) s += static_cast<double>(out[i]) * dh[i];
        return s;
    };
    std::vector<LstmCache> caches;
    stack.forward(params, inputs, steps, {}, {}, caches);
    params.zero_grad();
    stack.backward(params, caches, dh, {}, {}, {}, {}, {});

    const float h = 1e-2f;
    for (std::size_t t = 0; t < params.count(); ++t) {
        auto& tensor = params[t];
        for (std::size_t i = 0; i < tensor.size(); i += 5) {
            const float saved = tensor.value[i];
            tensor.value[i] = saved + h;
            const double up = loss();
            tensor.value[i] = saved - h;
            const double down = loss();
            tensor.value[i] = saved;
            CAPTURE(tensor.name);
            CHECK(tensor.grad[i] == doctest::Approx((up - down) / (2.0 * h)).epsilon(2e-2).scale(1.0));
        }
    }
}

TEST_CASE("LSTM step agrees with forward") {
    ParameterSet params;
    Lstm lstm(params, "l", 3, 4);
    Rng rng(1);
    params.init_uniform(rng, 0.3f);
    std::vector<float> inputs(6);
    for (auto& x : inputs) x = rng.uniform(-1, 1);
    LstmCache cache;
    lstm.forward(params, inputs, 2, {}, {}, cache);
    std::vector<float> h(4, 0.0f), c(4, 0.0f);
    lstm.step(params, std::span<const float>(inputs).subspan(0, 3), h, c);
    lstm.step(params, std::span<const float>(inputs).subspan(3, 3), h, c);
    for (std::size_t i = 0; i < 4; ++i) CHECK(h[i] == cache.final_h()[i]);
}

TEST_CASE("Adam minimizes a quadratic") {
    ParameterSet params;
    const auto id = params.add("x", 1, 3);
    params[id].value = {3.0f, -2.0f, 1.0f};
    Adam adam(params, {0.1f});
    for (int i = 0; i < 500; ++i) {
        params.zero_grad();
        for (std::size_t k = 0; k < 3; ++k) params[id].grad[k] = 2.0f * params[id].value[k];
        adam.step(params);
    }
    for (float v : params[id].value) CHECK(std::fabs(v) < 1e-2f);
}

TEST_CASE("clip_grad_norm rescales only when above the limit") {
    ParameterSet params;
    const auto id = params.add("g", 1, 2);
    params[id].grad = {3.0f, 4.0f};
    CHECK(params.clip_grad_norm(10.0f) == doctest::Approx(5.0f));
    CHECK(params[id].grad[0] == 3.0f);
    params.clip_grad_norm(1.0f);
    CHECK(params[id].grad[0] == doctest::Approx(0.6f));
    CHECK(params[id].grad[1] == doctest::Approx(0.8f));
}

TEST_CASE("checkpoint blobs round-trip and reject mismatched shapes") {
    const auto path = std::filesystem::temp_directory_path() / "sarcgen_nn_params.bin";
    ParameterSet a;
    a.add("w", 2, 3);
    a.add("b", 1, 3);
    Rng rng(2);
    a.init_uniform(rng, 1.0f);
    a.save(path);

    ParameterSet b;
    b.add("w", 2, 3);
    b.add("b", 1, 3);
    b.load(path);
    CHECK(a.snapshot() == b.snapshot());

    ParameterSet c;
    c.add("w", 3, 2);
    c.add("b", 1, 3);
    CHECK_THROWS_AS(c.load(path), CheckpointError);
}

TEST_CASE("vocabulary maps unknown tokens to id 0") {
    Vocabulary v;
    const auto id = v.add("rain");
    CHECK(v.id("rain") == id);
    CHECK(v.id("snow") == v.unk());
    CHECK(v.token(0) == "<unk>");
    const auto restored = Vocabulary::from_json(v.to_json());
    CHECK(restored.size() == v.size());
    CHECK(restored.id("rain") == id);
}

TEST_CASE("Rng draws are reproducible per seed") {
    Rng a(123), b(123), c(124);
    bool differs = false;
    for (int i = 0; i < 10; ++i) {
        const auto x = a.below(1000);
        CHECK(x == b.below(1000));
        differs = differs || x != c.below(1000);
    }
    CHECK(differs);
}
