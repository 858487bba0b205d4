#include "sarcgen/neutralizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "sarcgen/errors.hpp"
#include "sarcgen/simd/kernels.hpp"

namespace sarcgen {

// ---------------------------------------------------------------------------
// Attention discretization and word deletion
// ---------------------------------------------------------------------------

SentimentPrediction classify_sentiment(const AttentionClassifier& model, const Utterance& utterance) {
    if (utterance.empty()) throw EmptyTextError("cannot classify an empty utterance");
    return model.classify(utterance.tokens);
}

AttentionVector extract_attention(const AttentionClassifier& model, const Utterance& utterance) {
    if (utterance.empty()) throw PreconditionError("attention requires a non-empty utterance");
    AttentionVector v{model.attention(utterance.tokens)};
    if (v.weights.size() != utterance.size()) throw ShapeError("attention length differs from token count");
    return v;
}

AttentionMask discretize_attention(std::span<const float> attention, float threshold_factor) {
    if (attention.empty()) throw InvalidAttentionError("attention vector is empty");
    float max_a = 0.0f;
    for (float a : attention) {
        if (!std::isfinite(a) || a < 0.0f) throw InvalidAttentionError("attention weights must be finite and non-negative");
        max_a = std::max(max_a, a);
    }
    if (max_a <= 0.0f) throw InvalidAttentionError("attention vector is all zero");
    AttentionMask mask;
    mask.threshold_factor = threshold_factor;
    mask.keep.reserve(attention.size());
    const float cutoff = threshold_factor * max_a;
    for (float a : attention) mask.keep.push_back(a > cutoff ? 0 : 1);
    return mask;
}

NeutralizationResult apply_mask(const Utterance& utterance, std::span<const float> attention,
                                const AttentionMask& mask) {
    if (mask.keep.size() != utterance.size()) throw ShapeError("mask length differs from token count");
    NeutralizationResult result;
    result.mask = mask;
    result.attention.assign(attention.begin(), attention.end());
    result.utterance.original = utterance.original;
    result.utterance.polarity = Polarity::unknown;
    for (std::size_t i = 0; i < utterance.size(); ++i) {
        if (mask.keep[i] != 0) result.utterance.tokens.push_back(utterance.tokens[i]);
    }
    if (result.utterance.tokens.empty() && !utterance.empty()) {
        const auto it = std::min_element(attention.begin(), attention.end());
        result.utterance.tokens.push_back(utterance.tokens[static_cast<std::size_t>(it - attention.begin())]);
        result.degenerate = true;
    }
    return result;
}

NeutralizationResult neutralize(const AttentionClassifier& model, const Utterance& utterance, float threshold_factor) {
    const auto a = extract_attention(model, utterance);
    return apply_mask(utterance, a.weights, discretize_attention(a.weights, threshold_factor));
}

// ---------------------------------------------------------------------------
// Config / report serialization
// ---------------------------------------------------------------------------

void ClassifierConfig::validate() const {
    if (embedding_dim == 0 || recurrent_units_1 == 0 || recurrent_units_2 == 0 || attention_dim == 0 ||
        epochs == 0 || batch_size == 0) {
        throw ValidationError("classifier dimensions, epochs and batch size must be positive");
    }
    const bool labels_ok = (negative_label == 0 || negative_label == 1) && (positive_label == 0 || positive_label == 1);
    if (!labels_ok || negative_label == positive_label) throw ValidationError("labels must be distinct values in {0,1}");
    if (validation_fraction < 0.0 || validation_fraction >= 1.0) throw ValidationError("validation_fraction must be in [0,1)");
}

void to_json(nlohmann::json& j, const ClassifierConfig& c) {
    j = nlohmann::json{{"embedding_dim", c.embedding_dim},
                       {"recurrent_units_1", c.recurrent_units_1},
                       {"recurrent_units_2", c.recurrent_units_2},
                       {"attention_dim", c.attention_dim},
                       {"epochs", c.epochs},
                       {"batch_size", c.batch_size},
                       {"negative_label", c.negative_label},
                       {"positive_label", c.positive_label},
                       {"seed", c.seed},
                       {"learning_rate", c.learning_rate},
                       {"init_scale", c.init_scale},
                       {"grad_clip", c.grad_clip},
                       {"validation_fraction", c.validation_fraction},
                       {"patience", c.patience}};
}

void from_json(const nlohmann::json& j, ClassifierConfig& c) {
    ClassifierConfig d;
    c.embedding_dim = j.value("embedding_dim", d.embedding_dim);
    c.recurrent_units_1 = j.value("recurrent_units_1", d.recurrent_units_1);
    c.recurrent_units_2 = j.value("recurrent_units_2", d.recurrent_units_2);
    c.attention_dim = j.value("attention_dim", d.attention_dim);
    c.epochs = j.value("epochs", d.epochs);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.negative_label = j.value("negative_label", d.negative_label);
    c.positive_label = j.value("positive_label", d.positive_label);
    c.seed = j.value("seed", d.seed);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.init_scale = j.value("init_scale", d.init_scale);
    c.grad_clip = j.value("grad_clip", d.grad_clip);
    c.validation_fraction = j.value("validation_fraction", d.validation_fraction);
    c.patience = j.value("patience", d.patience);
}

void to_json(nlohmann::json& j, const ClassifierReport& r) {
    j = nlohmann::json{{"epoch_loss", r.epoch_loss},
                       {"epoch_val_accuracy", r.epoch_val_accuracy},
                       {"train_accuracy", r.train_accuracy},
                       {"val_accuracy", r.val_accuracy},
                       {"epochs_run", r.epochs_run},
                       {"early_stopped", r.early_stopped}};
    j["test_accuracy"] = r.test_accuracy ? nlohmann::json(*r.test_accuracy) : nlohmann::json(nullptr);
}

// ---------------------------------------------------------------------------
// SentimentModel
// ---------------------------------------------------------------------------

struct SentimentModel::Trace {
    std::vector<std::size_t> ids;
    std::vector<float> x;        // n x K
    nn::LstmCache first;
    std::vector<float> u;        // n x A, tanh(W h_t + b)
    std::vector<float> weights;  // n
    std::vector<float> seq2;     // n x H1
    nn::LstmCache second;
    float probs[2] = {0.0f, 0.0f};
};

SentimentModel::SentimentModel(ClassifierConfig config, nn::Vocabulary vocab)
    : config_(config), vocab_(std::move(vocab)) {
    config_.validate();
    build();
}

void SentimentModel::build() {
    const auto& c = config_;
    embedding_ = params_.add("embedding", vocab_.size(), c.embedding_dim);
    lstm1_ = nn::Lstm(params_, "lstm1", c.embedding_dim, c.recurrent_units_1);
    att_w_ = params_.add("attention.weight", c.attention_dim, c.recurrent_units_1);
    att_b_ = params_.add("attention.bias", c.attention_dim, 1);
    att_v_ = params_.add("attention.v", c.attention_dim, 1);
    lstm2_ = nn::Lstm(params_, "lstm2", c.embedding_dim, c.recurrent_units_2);
    out_w_ = params_.add("output.weight", 2, c.recurrent_units_2);
    out_b_ = params_.add("output.bias", 2, 1);
}

float SentimentModel::forward(std::span<const std::size_t> ids, Trace* trace) const {
    Trace local;
    Trace& tr = trace != nullptr ? *trace : local;
    const std::size_t n = ids.size();
    const std::size_t K = config_.embedding_dim;
    const std::size_t H1 = config_.recurrent_units_1;
    const std::size_t A = config_.attention_dim;

    tr.ids.assign(ids.begin(), ids.end());
    tr.x.resize(n * K);
    const auto& emb = params_[embedding_];
    for (std::size_t t = 0; t < n; ++t) {
        const auto row = emb.row(ids[t]);
        std::copy(row.begin(), row.end(), tr.x.begin() + static_cast<std::ptrdiff_t>(t * K));
    }
    lstm1_.forward(params_, tr.x, n, {}, {}, tr.first);

    tr.u.resize(n * A);
    tr.weights.resize(n);
    const auto& v = params_[att_v_].value;
    float max_e = -INFINITY;
    for (std::size_t t = 0; t < n; ++t) {
        std::span<float> u{tr.u.data() + t * A, A};
        simd::matvec(params_[att_w_].value, A, H1, tr.first.output(t), params_[att_b_].value, u);
        for (auto& s : u) s = std::tanh(s);
        tr.weights[t] = simd::dot(v, u);
        max_e = std::max(max_e, tr.weights[t]);
    }
    float z = 0.0f;
    for (auto& e : tr.weights) {
        e = std::exp(e - max_e);
        z += e;
    }
    for (auto& e : tr.weights) e /= z;

    tr.seq2.resize(n * K);
    const float nf = static_cast<float>(n);
    for (std::size_t t = 0; t < n; ++t) {
        simd::active().scale(tr.x.data() + t * K, nf * tr.weights[t], tr.seq2.data() + t * K, K);
    }
    lstm2_.forward(params_, tr.seq2, n, {}, {}, tr.second);

    float logits[2];
    simd::matvec(params_[out_w_].value, 2, config_.recurrent_units_2, tr.second.final_h(), params_[out_b_].value,
                 logits);
    const float m = std::max(logits[0], logits[1]);
    const float e0 = std::exp(logits[0] - m);
    const float e1 = std::exp(logits[1] - m);
    tr.probs[0] = e0 / (e0 + e1);
    tr.probs[1] = e1 / (e0 + e1);
    return tr.probs[config_.negative_label];
}

void SentimentModel::backward(const Trace& tr, int target_class) {
    const std::size_t n = tr.ids.size();
    const std::size_t K = config_.embedding_dim;
    const std::size_t H1 = config_.recurrent_units_1;
    const std::size_t H2 = config_.recurrent_units_2;
    const std::size_t A = config_.attention_dim;

    float dlogits[2] = {tr.probs[0], tr.probs[1]};
    dlogits[target_class] -= 1.0f;
    simd::outer_acc(dlogits, tr.second.final_h(), params_[out_w_].grad);
    simd::axpy(1.0f, dlogits, params_[out_b_].grad);
    std::vector<float> dh2(H2, 0.0f);
    simd::matvec_t_acc(params_[out_w_].value, 2, H2, dlogits, dh2);

    std::vector<float> dseq2(n * K, 0.0f);
    lstm2_.backward(params_, tr.second, {}, dh2, {}, dseq2, {}, {});

    const float nf = static_cast<float>(n);
    std::vector<float> dh1(n * H1, 0.0f);
    std::vector<float> dx(n * K, 0.0f);
    std::vector<float> dweights(n);
    float weighted = 0.0f;
    for (std::size_t t = 0; t < n; ++t) {
        std::span<const float> ds{dseq2.data() + t * K, K};
        simd::axpy(nf * tr.weights[t], ds, {dx.data() + t * K, K});
        dweights[t] = nf * simd::dot(ds, std::span<const float>{tr.x.data() + t * K, K});
        weighted += tr.weights[t] * dweights[t];
    }

    auto& w = params_[att_w_];
    auto& v = params_[att_v_];
    std::vector<float> dsc(A);
    for (std::size_t t = 0; t < n; ++t) {
        const float de = tr.weights[t] * (dweights[t] - weighted);
        if (de == 0.0f) continue;
        std::span<const float> u{tr.u.data() + t * A, A};
        simd::axpy(de, u, v.grad);
        for (std::size_t j = 0; j < A; ++j) dsc[j] = de * v.value[j] * (1.0f - u[j] * u[j]);
        simd::outer_acc(dsc, tr.first.output(t), w.grad);
        simd::axpy(1.0f, dsc, params_[att_b_].grad);
        simd::matvec_t_acc(w.value, A, H1, dsc, {dh1.data() + t * H1, H1});
    }

    std::vector<float> dx1(n * K, 0.0f);
    lstm1_.backward(params_, tr.first, dh1, {}, {}, dx1, {}, {});
    simd::axpy(1.0f, dx1, dx);
    auto& emb = params_[embedding_];
    for (std::size_t t = 0; t < n; ++t) {
        simd::axpy(1.0f, std::span<const float>{dx.data() + t * K, K}, emb.grad_row(tr.ids[t]));
    }
}

SentimentPrediction SentimentModel::classify(std::span<const std::string> tokens) const {
    if (tokens.empty()) throw EmptyTextError("cannot classify an empty utterance");
    const auto ids = vocab_.encode(tokens);
    const float p_neg = forward(ids, nullptr);
    if (p_neg >= 0.5f) return {Polarity::negative, p_neg};
    return {Polarity::positive, 1.0 - p_neg};
}

std::vector<float> SentimentModel::attention(std::span<const std::string> tokens) const {
    if (tokens.empty()) throw PreconditionError("attention requires a non-empty utterance");
    const auto ids = vocab_.encode(tokens);
    Trace tr;
    forward(ids, &tr);
    return tr.weights;
}

void SentimentModel::save(const std::filesystem::path& stem) const {
    auto bin = stem;
    bin += ".bin";
    auto sidecar = stem;
    sidecar += ".json";
    params_.save(bin);
    nlohmann::json j;
    j["kind"] = "lstm-attention";
    j["format_version"] = 1;
    j["config"] = config_;
    j["vocabulary"] = vocab_.to_json();
    j["metrics"] = report_;
    j["weights"] = bin.filename().string();
    std::ofstream out(sidecar);
    if (!out) throw IOError("cannot write " + sidecar.string());
    out << j.dump(2) << '\n';
}

SentimentModel SentimentModel::load(const std::filesystem::path& sidecar) {
    std::ifstream in(sidecar);
    if (!in) throw IOError("cannot open " + sidecar.string());
    const auto j = nlohmann::json::parse(in);
    if (j.value("kind", "") != "lstm-attention") throw CheckpointError("not an lstm-attention sidecar: " + sidecar.string());
    if (j.value("format_version", 0) != 1) throw CheckpointError("unsupported sidecar version");
    SentimentModel model(j.at("config").get<ClassifierConfig>(), nn::Vocabulary::from_json(j.at("vocabulary")));
    if (j.contains("metrics")) {
        const auto& m = j["metrics"];
        model.report_.epoch_loss = m.value("epoch_loss", std::vector<double>{});
        model.report_.epoch_val_accuracy = m.value("epoch_val_accuracy", std::vector<double>{});
        model.report_.train_accuracy = m.value("train_accuracy", 0.0);
        model.report_.val_accuracy = m.value("val_accuracy", 0.0);
        if (m.contains("test_accuracy") && !m["test_accuracy"].is_null()) model.report_.test_accuracy = m["test_accuracy"].get<double>();
        model.report_.epochs_run = m.value("epochs_run", std::size_t{0});
        model.report_.early_stopped = m.value("early_stopped", false);
    }
    model.params_.load(sidecar.parent_path() / j.at("weights").get<std::string>());
    return model;
}

double accuracy(const AttentionClassifier& model, std::span<const Utterance> data) {
    if (data.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& u : data) correct += model.classify(u.tokens).label == u.polarity ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

SentimentModel train_sentiment_classifier(std::span<const Utterance> train, std::span<const Utterance> test,
                                          const ClassifierConfig& config) {
    config.validate();
    std::vector<Utterance> labeled;
    bool has_pos = false;
    bool has_neg = false;
    for (const auto& u : train) {
        if (u.empty() || u.polarity == Polarity::unknown) continue;
        has_pos |= u.polarity == Polarity::positive;
        has_neg |= u.polarity == Polarity::negative;
        labeled.push_back(u);
    }
    if (!has_pos || !has_neg) throw DegenerateCorpusError("training corpus needs both positive and negative sentences");

    nn::Rng rng(config.seed);
    rng.shuffle(labeled);
    const auto n_val = static_cast<std::size_t>(static_cast<double>(labeled.size()) * config.validation_fraction);
    std::vector<Utterance> val(labeled.end() - static_cast<std::ptrdiff_t>(n_val), labeled.end());
    labeled.resize(labeled.size() - n_val);

    nn::Vocabulary vocab;
    for (const auto& u : labeled) {
        for (const auto& t : u.tokens) vocab.add(t);
    }
    SentimentModel model(config, std::move(vocab));
    model.params_.init_uniform(rng, config.init_scale);
    model.lstm1_.init_forget_bias(model.params_, 1.0f);
    model.lstm2_.init_forget_bias(model.params_, 1.0f);

    std::vector<std::vector<std::size_t>> encoded;
    std::vector<int> targets;
    for (const auto& u : labeled) {
        encoded.push_back(model.vocab_.encode(u.tokens));
        targets.push_back(u.polarity == Polarity::negative ? config.negative_label : config.positive_label);
    }

    nn::Adam adam(model.params_, {config.learning_rate});
    std::vector<std::size_t> order(encoded.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    auto& report = model.report_;
    double best_val = -1.0;
    std::size_t since_best = 0;
    std::vector<std::vector<float>> best_params;
    SentimentModel::Trace trace;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            model.params_.zero_grad();
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t i = order[k];
                model.forward(encoded[i], &trace);
                loss -= std::log(std::max(trace.probs[targets[i]], 1e-12f));
                model.backward(trace, targets[i]);
            }
            model.params_.scale_grad(1.0f / static_cast<float>(end - start));
            model.params_.clip_grad_norm(config.grad_clip);
            adam.step(model.params_);
        }
        report.epoch_loss.push_back(loss / static_cast<double>(order.size()));
        ++report.epochs_run;
        if (val.empty()) continue;
        const double acc = accuracy(model, val);
        report.epoch_val_accuracy.push_back(acc);
        if (acc > best_val) {
            best_val = acc;
            since_best = 0;
            best_params = model.params_.snapshot();
        } else if (++since_best >= config.patience) {
            report.early_stopped = true;
            break;
        }
    }
    if (!best_params.empty()) model.params_.restore(best_params);

    report.train_accuracy = accuracy(model, labeled);
    report.val_accuracy = val.empty() ? 0.0 : accuracy(model, val);
    if (!test.empty()) report.test_accuracy = accuracy(model, test);
    return model;
}

// ---------------------------------------------------------------------------
// LexiconSentimentModel
// ---------------------------------------------------------------------------

LexiconSentimentModel::LexiconSentimentModel(std::map<std::string, Entry, std::less<>> entries, float default_weight)
    : entries_(std::move(entries)), default_weight_(default_weight) {
    if (!(default_weight_ > 0.0f)) throw ValidationError("lexicon default_weight must be positive");
    for (const auto& [word, e] : entries_) {
        if (!(e.weight > 0.0f)) throw ValidationError("lexicon weight for '" + word + "' must be positive");
    }
}

SentimentPrediction LexiconSentimentModel::classify(std::span<const std::string> tokens) const {
    if (tokens.empty()) throw EmptyTextError("cannot classify an empty utterance");
    double score = 0.0;
    for (const auto& t : tokens) {
        if (auto it = entries_.find(t); it != entries_.end()) score += it->second.polarity;
    }
    const double p = 1.0 / (1.0 + std::exp(-std::abs(score)));
    return {score < 0.0 ? Polarity::negative : Polarity::positive, p};
}

std::vector<float> LexiconSentimentModel::attention(std::span<const std::string> tokens) const {
    if (tokens.empty()) throw PreconditionError("attention requires a non-empty utterance");
    std::vector<float> w;
    w.reserve(tokens.size());
    float total = 0.0f;
    for (const auto& t : tokens) {
        auto it = entries_.find(t);
        w.push_back(it == entries_.end() ? default_weight_ : it->second.weight);
        total += w.back();
    }
    for (auto& x : w) x /= total;
    return w;
}

LexiconSentimentModel LexiconSentimentModel::from_json(const nlohmann::json& j) {
    std::map<std::string, Entry, std::less<>> entries;
    for (const auto& [word, e] : j.at("entries").items()) {
        entries[word] = Entry{e.value("weight", 1.0f), e.value("polarity", 0.0f)};
    }
    return LexiconSentimentModel(std::move(entries), j.value("default_weight", 0.01f));
}

std::shared_ptr<const AttentionClassifier> load_neutralizer(const std::filesystem::path& sidecar) {
    std::ifstream in(sidecar);
    if (!in) throw IOError("cannot open " + sidecar.string());
    const auto j = nlohmann::json::parse(in);
    const auto kind = j.value("kind", "");
    if (kind == "lexicon") return std::make_shared<LexiconSentimentModel>(LexiconSentimentModel::from_json(j));
    if (kind == "lstm-attention") return std::make_shared<SentimentModel>(SentimentModel::load(sidecar));
    throw CheckpointError("unknown neutralizer kind '" + kind + "' in " + sidecar.string());
}

}  // namespace sarcgen
