#include "sarcgen/inducer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "sarcgen/errors.hpp"
#include "sarcgen/simd/kernels.hpp"

namespace sarcgen {
namespace {

std::vector<std::string> split_spaces(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && s[i] == ' ') ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ') ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

Induction copy_through(const Utterance& neutral) { return Induction{neutral.tokens, true}; }

void log_softmax(std::span<float> v) {
    float m = -std::numeric_limits<float>::infinity();
    for (float x : v) m = std::max(m, x);
    double z = 0.0;
    for (float x : v) z += std::exp(static_cast<double>(x - m));
    const float lz = m + static_cast<float>(std::log(z));
    for (auto& x : v) x -= lz;
}

}  // namespace

// ---------------------------------------------------------------------------
// Pairs
// ---------------------------------------------------------------------------

std::vector<InductionPair> build_induction_pairs(std::span<const Utterance> positive_corpus,
                                                 const AttentionClassifier& neutralizer) {
    std::vector<InductionPair> pairs;
    for (const auto& u : positive_corpus) {
        if (u.empty()) continue;
        auto result = neutralize(neutralizer, u);
        if (result.degenerate) continue;
        InductionPair p{std::move(result.utterance), u};
        p.target.polarity = Polarity::positive;
        pairs.push_back(std::move(p));
    }
    if (pairs.empty()) throw EmptyCorpusError("no induction pairs survived neutralization");
    return pairs;
}

void save_pairs(const std::filesystem::path& path, std::span<const InductionPair> pairs) {
    std::ofstream out(path);
    if (!out) throw IOError("cannot write " + path.string());
    for (const auto& p : pairs) {
        out << nlohmann::json{{"source", p.source.text()}, {"target", p.target.text()}}.dump() << '\n';
    }
}

std::vector<InductionPair> load_pairs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open " + path.string());
    std::vector<InductionPair> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        InductionPair p;
        p.source.tokens = split_spaces(j.at("source").get<std::string>());
        p.source.original = p.source.text();
        p.target.tokens = split_spaces(j.at("target").get<std::string>());
        p.target.original = p.target.text();
        p.target.polarity = Polarity::positive;
        pairs.push_back(std::move(p));
    }
    return pairs;
}

Induction induce_positive(const Inducer& model, const Utterance& neutral) { return model.induce(neutral); }

// ---------------------------------------------------------------------------
// Config / report
// ---------------------------------------------------------------------------

void InducerConfig::validate() const {
    if (embedding_dim == 0 || encoder_layers == 0 || decoder_layers == 0 || hidden_units == 0 || max_train_steps == 0 ||
        batch_size == 0 || valid_every == 0 || beam_width == 0) {
        throw ValidationError("inducer dimensions, layer counts, steps and widths must be positive");
    }
    if (validation_fraction < 0.0 || validation_fraction >= 1.0) throw ValidationError("validation_fraction must be in [0,1)");
    if (!(max_length_ratio > 0.0)) throw ValidationError("max_length_ratio must be positive");
    if (!(learning_rate > 0.0f)) throw ValidationError("learning_rate must be positive");
}

void to_json(nlohmann::json& j, const InducerConfig& c) {
    j = nlohmann::json{{"embedding_dim", c.embedding_dim},
                       {"encoder_layers", c.encoder_layers},
                       {"decoder_layers", c.decoder_layers},
                       {"hidden_units", c.hidden_units},
                       {"max_train_steps", c.max_train_steps},
                       {"early_stopping", c.early_stopping},
                       {"seed", c.seed},
                       {"batch_size", c.batch_size},
                       {"learning_rate", c.learning_rate},
                       {"init_scale", c.init_scale},
                       {"grad_clip", c.grad_clip},
                       {"validation_fraction", c.validation_fraction},
                       {"valid_every", c.valid_every},
                       {"patience", c.patience},
                       {"beam_width", c.beam_width},
                       {"max_length_ratio", c.max_length_ratio}};
}

void from_json(const nlohmann::json& j, InducerConfig& c) {
    InducerConfig d;
    c.embedding_dim = j.value("embedding_dim", d.embedding_dim);
    c.encoder_layers = j.value("encoder_layers", d.encoder_layers);
    c.decoder_layers = j.value("decoder_layers", d.decoder_layers);
    c.hidden_units = j.value("hidden_units", d.hidden_units);
    c.max_train_steps = j.value("max_train_steps", d.max_train_steps);
    c.early_stopping = j.value("early_stopping", d.early_stopping);
    c.seed = j.value("seed", d.seed);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.init_scale = j.value("init_scale", d.init_scale);
    c.grad_clip = j.value("grad_clip", d.grad_clip);
    c.validation_fraction = j.value("validation_fraction", d.validation_fraction);
    c.valid_every = j.value("valid_every", d.valid_every);
    c.patience = j.value("patience", d.patience);
    c.beam_width = j.value("beam_width", d.beam_width);
    c.max_length_ratio = j.value("max_length_ratio", d.max_length_ratio);
}

void to_json(nlohmann::json& j, const InducerReport& r) {
    j = nlohmann::json{{"steps_run", r.steps_run},
                       {"val_perplexity", r.val_perplexity},
                       {"best_val_perplexity", r.best_val_perplexity},
                       {"held_out_bleu", r.held_out_bleu},
                       {"train_pairs", r.train_pairs},
                       {"val_pairs", r.val_pairs},
                       {"early_stopped", r.early_stopped}};
}

// ---------------------------------------------------------------------------
// Seq2SeqInducer
// ---------------------------------------------------------------------------

struct Seq2SeqInducer::Encoded {
    std::size_t length = 0;
    std::vector<float> states;  // S x H, top encoder layer
    std::vector<float> keys;    // S x H, W_a * state
    std::vector<float> h0;      // decoder layers x H
    std::vector<float> c0;
};

struct Seq2SeqInducer::DecoderState {
    std::vector<float> h;  // layers x H
    std::vector<float> c;
};

Seq2SeqInducer::Seq2SeqInducer(InducerConfig config, nn::Vocabulary vocab) : config_(config), vocab_(std::move(vocab)) {
    config_.validate();
    if (!vocab_.contains(nn::Vocabulary::kBos) || !vocab_.contains(nn::Vocabulary::kEos)) {
        throw CheckpointError("inducer vocabulary lacks <s> or </s>");
    }
    build();
}

void Seq2SeqInducer::build() {
    const auto& c = config_;
    const std::size_t H = c.hidden_units;
    src_emb_ = params_.add("source.embedding", vocab_.size(), c.embedding_dim);
    tgt_emb_ = params_.add("target.embedding", vocab_.size(), c.embedding_dim);
    encoder_ = nn::StackedLstm(params_, "encoder", c.embedding_dim, H, c.encoder_layers);
    decoder_ = nn::StackedLstm(params_, "decoder", c.embedding_dim, H, c.decoder_layers);
    att_w_ = params_.add("attention.weight", H, H);
    comb_w_ = params_.add("combine.weight", H, 2 * H);
    comb_b_ = params_.add("combine.bias", H, 1);
    out_w_ = params_.add("output.weight", vocab_.size(), H);
    out_b_ = params_.add("output.bias", vocab_.size(), 1);
}

Seq2SeqInducer::Encoded Seq2SeqInducer::encode(std::span<const std::size_t> src) const {
    const std::size_t S = src.size();
    const std::size_t E = config_.embedding_dim;
    const std::size_t H = config_.hidden_units;
    std::vector<float> x(S * E);
    for (std::size_t t = 0; t < S; ++t) {
        const auto row = params_[src_emb_].row(src[t]);
        std::copy(row.begin(), row.end(), x.begin() + static_cast<std::ptrdiff_t>(t * E));
    }
    std::vector<nn::LstmCache> caches;
    encoder_.forward(params_, x, S, {}, {}, caches);

    Encoded enc;
    enc.length = S;
    const auto top = caches.back().outputs();
    enc.states.assign(top.begin(), top.end());
    enc.keys.resize(S * H);
    for (std::size_t s = 0; s < S; ++s) {
        simd::matvec(params_[att_w_].value, H, H, {enc.states.data() + s * H, H}, {}, {enc.keys.data() + s * H, H});
    }
    const std::size_t Ld = config_.decoder_layers;
    enc.h0.assign(Ld * H, 0.0f);
    enc.c0.assign(Ld * H, 0.0f);
    for (std::size_t l = 0; l < std::min(Ld, caches.size()); ++l) {
        const auto h = caches[l].final_h();
        const auto c = caches[l].final_c();
        std::copy(h.begin(), h.end(), enc.h0.begin() + static_cast<std::ptrdiff_t>(l * H));
        std::copy(c.begin(), c.end(), enc.c0.begin() + static_cast<std::ptrdiff_t>(l * H));
    }
    return enc;
}

std::size_t Seq2SeqInducer::decode_step(const Encoded& enc, DecoderState& st, std::size_t input,
                                        std::vector<float>& log_probs) const {
    const std::size_t H = config_.hidden_units;
    const std::size_t S = enc.length;
    const auto emb = params_[tgt_emb_].row(input);
    std::vector<float> x(emb.begin(), emb.end());
    for (std::size_t l = 0; l < decoder_.layers(); ++l) {
        std::span<float> h{st.h.data() + l * H, H};
        std::span<float> c{st.c.data() + l * H, H};
        decoder_.layer(l).step(params_, x, h, c);
        x.assign(h.begin(), h.end());
    }
    // x now holds the top decoder state.
    std::vector<float> alpha(S);
    float m = -std::numeric_limits<float>::infinity();
    for (std::size_t s = 0; s < S; ++s) {
        alpha[s] = simd::dot(x, {enc.keys.data() + s * H, H});
        m = std::max(m, alpha[s]);
    }
    float z = 0.0f;
    for (auto& a : alpha) {
        a = std::exp(a - m);
        z += a;
    }
    std::vector<float> cat(2 * H, 0.0f);
    std::size_t best = 0;
    for (std::size_t s = 0; s < S; ++s) {
        alpha[s] /= z;
        if (alpha[s] > alpha[best]) best = s;
        simd::axpy(alpha[s], std::span<const float>{enc.states.data() + s * H, H}, {cat.data(), H});
    }
    std::copy(x.begin(), x.end(), cat.begin() + static_cast<std::ptrdiff_t>(H));
    std::vector<float> ht(H);
    simd::matvec(params_[comb_w_].value, H, 2 * H, cat, params_[comb_b_].value, ht);
    for (auto& v : ht) v = std::tanh(v);
    log_probs.resize(vocab_.size());
    simd::matvec(params_[out_w_].value, vocab_.size(), H, ht, params_[out_b_].value, log_probs);
    log_softmax(log_probs);
    return best;
}

std::vector<std::size_t> Seq2SeqInducer::greedy(const Encoded& enc, std::size_t max_len,
                                                std::vector<std::size_t>& attended) const {
    const std::size_t bos = vocab_.id(nn::Vocabulary::kBos);
    const std::size_t eos = vocab_.id(nn::Vocabulary::kEos);
    DecoderState st{enc.h0, enc.c0};
    std::vector<std::size_t> out;
    std::vector<float> lp;
    std::size_t input = bos;
    for (std::size_t step = 0; step < max_len; ++step) {
        const std::size_t att = decode_step(enc, st, input, lp);
        lp[bos] = -std::numeric_limits<float>::infinity();
        const auto next = static_cast<std::size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin());
        if (next == eos) break;
        out.push_back(next);
        attended.push_back(att);
        input = next;
    }
    return out;
}

std::vector<std::size_t> Seq2SeqInducer::beam(const Encoded& enc, std::size_t max_len,
                                              std::vector<std::size_t>& attended) const {
    struct Hyp {
        std::vector<std::size_t> ids;
        std::vector<std::size_t> att;
        DecoderState st;
        double score = 0.0;
    };
    struct Candidate {
        double score;
        std::size_t hyp;
        std::size_t word;
        std::size_t att;
    };
    const std::size_t width = config_.beam_width;
    const std::size_t bos = vocab_.id(nn::Vocabulary::kBos);
    const std::size_t eos = vocab_.id(nn::Vocabulary::kEos);

    std::vector<Hyp> live{Hyp{{}, {}, DecoderState{enc.h0, enc.c0}, 0.0}};
    std::vector<Hyp> finished;
    std::vector<float> lp;
    for (std::size_t step = 0; step < max_len && !live.empty() && finished.size() < width; ++step) {
        std::vector<Candidate> cands;
        std::vector<DecoderState> next_states;
        for (std::size_t h = 0; h < live.size(); ++h) {
            DecoderState st = live[h].st;
            const std::size_t input = live[h].ids.empty() ? bos : live[h].ids.back();
            const std::size_t att = decode_step(enc, st, input, lp);
            next_states.push_back(std::move(st));
            for (std::size_t w = 0; w < lp.size(); ++w) {
                if (w == bos) continue;
                cands.push_back({live[h].score + lp[w], h, w, att});
            }
        }
        std::stable_sort(cands.begin(), cands.end(),
                         [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
        std::vector<Hyp> next;
        for (std::size_t k = 0; k < std::min(width, cands.size()); ++k) {
            const auto& c = cands[k];
            Hyp h{live[c.hyp].ids, live[c.hyp].att, next_states[c.hyp], c.score};
            if (c.word == eos) {
                finished.push_back(std::move(h));
            } else {
                h.ids.push_back(c.word);
                h.att.push_back(c.att);
                next.push_back(std::move(h));
            }
        }
        live = std::move(next);
    }
    const auto& pool = finished.empty() ? live : finished;
    if (pool.empty()) return {};
    const auto best = std::max_element(pool.begin(), pool.end(),
                                       [](const Hyp& a, const Hyp& b) { return a.score < b.score; });
    attended = best->att;
    return best->ids;
}

Induction Seq2SeqInducer::induce(const Utterance& neutral) const {
    if (neutral.empty()) return copy_through(neutral);
    const auto ids = vocab_.encode(neutral.tokens);
    if (std::all_of(ids.begin(), ids.end(), [&](std::size_t id) { return id == vocab_.unk(); })) {
        return copy_through(neutral);
    }
    const auto enc = encode(ids);
    const auto max_len = static_cast<std::size_t>(std::ceil(config_.max_length_ratio * static_cast<double>(ids.size()))) + 2;
    std::vector<std::size_t> attended;
    const auto out = config_.beam_width > 1 ? beam(enc, max_len, attended) : greedy(enc, max_len, attended);
    Induction result;
    for (std::size_t i = 0; i < out.size(); ++i) {
        result.tokens.push_back(out[i] == vocab_.unk() ? neutral.tokens[attended[i]] : vocab_.token(out[i]));
    }
    if (result.tokens.empty()) return copy_through(neutral);
    return result;
}

double Seq2SeqInducer::loss(const InductionPair& pair) const {
    const auto src = vocab_.encode(pair.source.tokens);
    if (src.empty()) throw PreconditionError("induction pair has an empty source");
    const auto enc = encode(src);
    DecoderState st{enc.h0, enc.c0};
    std::vector<float> lp;
    std::size_t input = vocab_.id(nn::Vocabulary::kBos);
    double nll = 0.0;
    auto tgt = vocab_.encode(pair.target.tokens);
    tgt.push_back(vocab_.id(nn::Vocabulary::kEos));
    for (std::size_t y : tgt) {
        decode_step(enc, st, input, lp);
        nll -= lp[y];
        input = y;
    }
    return nll;
}

double Seq2SeqInducer::train_pair(std::span<const std::size_t> src, std::span<const std::size_t> tgt,
                                  std::size_t& tokens) {
    const std::size_t S = src.size();
    const std::size_t steps = tgt.size() + 1;
    const std::size_t E = config_.embedding_dim;
    const std::size_t H = config_.hidden_units;
    const std::size_t V = vocab_.size();
    const std::size_t Le = config_.encoder_layers;
    const std::size_t Ld = config_.decoder_layers;
    const std::size_t bos = vocab_.id(nn::Vocabulary::kBos);
    const std::size_t eos = vocab_.id(nn::Vocabulary::kEos);

    // Encoder.
    std::vector<float> xs(S * E);
    for (std::size_t t = 0; t < S; ++t) {
        const auto row = params_[src_emb_].row(src[t]);
        std::copy(row.begin(), row.end(), xs.begin() + static_cast<std::ptrdiff_t>(t * E));
    }
    std::vector<nn::LstmCache> enc_caches;
    encoder_.forward(params_, xs, S, {}, {}, enc_caches);
    const auto hs_span = enc_caches.back().outputs();
    const std::vector<float> hs(hs_span.begin(), hs_span.end());
    std::vector<float> keys(S * H);
    for (std::size_t s = 0; s < S; ++s) {
        simd::matvec(params_[att_w_].value, H, H, {hs.data() + s * H, H}, {}, {keys.data() + s * H, H});
    }
    std::vector<float> h0(Ld * H, 0.0f);
    std::vector<float> c0(Ld * H, 0.0f);
    for (std::size_t l = 0; l < std::min(Le, Ld); ++l) {
        const auto h = enc_caches[l].final_h();
        const auto c = enc_caches[l].final_c();
        std::copy(h.begin(), h.end(), h0.begin() + static_cast<std::ptrdiff_t>(l * H));
        std::copy(c.begin(), c.end(), c0.begin() + static_cast<std::ptrdiff_t>(l * H));
    }

    // Decoder, teacher forced on <s> y_1 .. y_T.
    std::vector<std::size_t> inputs{bos};
    inputs.insert(inputs.end(), tgt.begin(), tgt.end());
    std::vector<float> xd(steps * E);
    for (std::size_t t = 0; t < steps; ++t) {
        const auto row = params_[tgt_emb_].row(inputs[t]);
        std::copy(row.begin(), row.end(), xd.begin() + static_cast<std::ptrdiff_t>(t * E));
    }
    std::vector<nn::LstmCache> dec_caches;
    decoder_.forward(params_, xd, steps, h0, c0, dec_caches);
    const auto& top = dec_caches.back();

    // Attention, combination and output, with their gradients.
    auto& wa = params_[att_w_];
    auto& wc = params_[comb_w_];
    auto& wo = params_[out_w_];
    std::vector<float> dtop(steps * H, 0.0f);
    std::vector<float> dhs(S * H, 0.0f);
    std::vector<float> dkeys(S * H, 0.0f);
    std::vector<float> alpha(S), dalpha(S), cat(2 * H), dcat(2 * H), ht(H), dht(H), logits(V);
    double nll = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
        const auto h = top.output(t);
        float m = -std::numeric_limits<float>::infinity();
        for (std::size_t s = 0; s < S; ++s) {
            alpha[s] = simd::dot(h, {keys.data() + s * H, H});
            m = std::max(m, alpha[s]);
        }
        float z = 0.0f;
        for (auto& a : alpha) {
            a = std::exp(a - m);
            z += a;
        }
        std::fill(cat.begin(), cat.end(), 0.0f);
        for (std::size_t s = 0; s < S; ++s) {
            alpha[s] /= z;
            simd::axpy(alpha[s], std::span<const float>{hs.data() + s * H, H}, {cat.data(), H});
        }
        std::copy(h.begin(), h.end(), cat.begin() + static_cast<std::ptrdiff_t>(H));
        simd::matvec(wc.value, H, 2 * H, cat, params_[comb_b_].value, ht);
        for (auto& v : ht) v = std::tanh(v);
        simd::matvec(wo.value, V, H, ht, params_[out_b_].value, logits);
        log_softmax(logits);
        const std::size_t y = t < tgt.size() ? tgt[t] : eos;
        nll -= logits[y];

        // dlogits = softmax - onehot, reusing the buffer.
        for (auto& v : logits) v = std::exp(v);
        logits[y] -= 1.0f;
        simd::outer_acc(logits, ht, wo.grad);
        simd::axpy(1.0f, logits, params_[out_b_].grad);
        std::fill(dht.begin(), dht.end(), 0.0f);
        simd::matvec_t_acc(wo.value, V, H, logits, dht);
        for (std::size_t j = 0; j < H; ++j) dht[j] *= 1.0f - ht[j] * ht[j];
        simd::outer_acc(dht, cat, wc.grad);
        simd::axpy(1.0f, dht, params_[comb_b_].grad);
        std::fill(dcat.begin(), dcat.end(), 0.0f);
        simd::matvec_t_acc(wc.value, H, 2 * H, dht, dcat);

        std::span<float> dh{dtop.data() + t * H, H};
        simd::axpy(1.0f, std::span<const float>{dcat.data() + H, H}, dh);
        const std::span<const float> dctx{dcat.data(), H};
        float weighted = 0.0f;
        for (std::size_t s = 0; s < S; ++s) {
            dalpha[s] = simd::dot(dctx, {hs.data() + s * H, H});
            weighted += alpha[s] * dalpha[s];
            simd::axpy(alpha[s], dctx, {dhs.data() + s * H, H});
        }
        for (std::size_t s = 0; s < S; ++s) {
            const float de = alpha[s] * (dalpha[s] - weighted);
            if (de == 0.0f) continue;
            simd::axpy(de, std::span<const float>{keys.data() + s * H, H}, dh);
            simd::axpy(de, h, {dkeys.data() + s * H, H});
        }
    }
    for (std::size_t s = 0; s < S; ++s) {
        const std::span<const float> dk{dkeys.data() + s * H, H};
        simd::outer_acc(dk, {hs.data() + s * H, H}, wa.grad);
        simd::matvec_t_acc(wa.value, H, H, dk, {dhs.data() + s * H, H});
    }

    // Back through the decoder into the encoder's final states.
    std::vector<float> dxd(steps * E, 0.0f);
    std::vector<float> dh0(Ld * H, 0.0f);
    std::vector<float> dc0(Ld * H, 0.0f);
    decoder_.backward(params_, dec_caches, dtop, {}, {}, dxd, dh0, dc0);
    for (std::size_t t = 0; t < steps; ++t) {
        simd::axpy(1.0f, std::span<const float>{dxd.data() + t * E, E}, params_[tgt_emb_].grad_row(inputs[t]));
    }
    std::vector<float> dh_final(Le * H, 0.0f);
    std::vector<float> dc_final(Le * H, 0.0f);
    const std::size_t shared = std::min(Le, Ld) * H;
    std::copy(dh0.begin(), dh0.begin() + static_cast<std::ptrdiff_t>(shared), dh_final.begin());
    std::copy(dc0.begin(), dc0.begin() + static_cast<std::ptrdiff_t>(shared), dc_final.begin());
    std::vector<float> dxs(S * E, 0.0f);
    encoder_.backward(params_, enc_caches, dhs, dh_final, dc_final, dxs, {}, {});
    for (std::size_t t = 0; t < S; ++t) {
        simd::axpy(1.0f, std::span<const float>{dxs.data() + t * E, E}, params_[src_emb_].grad_row(src[t]));
    }
    tokens += steps;
    return nll;
}

void Seq2SeqInducer::save(const std::filesystem::path& stem) const {
    auto bin = stem;
    bin += ".bin";
    auto sidecar = stem;
    sidecar += ".json";
    params_.save(bin);
    nlohmann::json j;
    j["kind"] = "seq2seq";
    j["format_version"] = 1;
    j["config"] = config_;
    j["vocabulary"] = vocab_.to_json();
    j["metrics"] = report_;
    j["weights"] = bin.filename().string();
    std::ofstream out(sidecar);
    if (!out) throw IOError("cannot write " + sidecar.string());
    out << j.dump(2) << '\n';
}

Seq2SeqInducer Seq2SeqInducer::load(const std::filesystem::path& sidecar) {
    std::ifstream in(sidecar);
    if (!in) throw IOError("cannot open " + sidecar.string());
    const auto j = nlohmann::json::parse(in);
    if (j.value("kind", "") != "seq2seq") throw CheckpointError("not a seq2seq sidecar: " + sidecar.string());
    if (j.value("format_version", 0) != 1) throw CheckpointError("unsupported sidecar version");
    Seq2SeqInducer model(j.at("config").get<InducerConfig>(), nn::Vocabulary::from_json(j.at("vocabulary")));
    if (j.contains("metrics")) {
        const auto& m = j["metrics"];
        model.report_.steps_run = m.value("steps_run", std::size_t{0});
        model.report_.val_perplexity = m.value("val_perplexity", std::vector<double>{});
        model.report_.best_val_perplexity = m.value("best_val_perplexity", 0.0);
        model.report_.held_out_bleu = m.value("held_out_bleu", 0.0);
        model.report_.train_pairs = m.value("train_pairs", std::size_t{0});
        model.report_.val_pairs = m.value("val_pairs", std::size_t{0});
        model.report_.early_stopped = m.value("early_stopped", false);
    }
    model.params_.load(sidecar.parent_path() / j.at("weights").get<std::string>());
    return model;
}

Seq2SeqInducer train_inducer(std::span<const InductionPair> pairs, const InducerConfig& config) {
    config.validate();
    std::vector<InductionPair> usable;
    for (const auto& p : pairs) {
        if (!p.source.empty() && !p.target.empty()) usable.push_back(p);
    }
    if (usable.size() < 2) throw DegenerateCorpusError("training the inducer needs at least two non-empty pairs");

    nn::Rng rng(config.seed);
    rng.shuffle(usable);
    std::size_t n_val = 0;
    if (config.validation_fraction > 0.0) {
        n_val = static_cast<std::size_t>(static_cast<double>(usable.size()) * config.validation_fraction);
        n_val = std::clamp<std::size_t>(n_val, 1, usable.size() - 1);
    }
    std::vector<InductionPair> val(usable.end() - static_cast<std::ptrdiff_t>(n_val), usable.end());
    usable.resize(usable.size() - n_val);

    nn::Vocabulary vocab;
    vocab.add(nn::Vocabulary::kBos);
    vocab.add(nn::Vocabulary::kEos);
    for (const auto& p : usable) {
        for (const auto& t : p.source.tokens) vocab.add(t);
        for (const auto& t : p.target.tokens) vocab.add(t);
    }

    Seq2SeqInducer model(config, std::move(vocab));
    model.params_.init_uniform(rng, config.init_scale);
    model.encoder_.init_forget_bias(model.params_, 1.0f);
    model.decoder_.init_forget_bias(model.params_, 1.0f);

    std::vector<std::vector<std::size_t>> src;
    std::vector<std::vector<std::size_t>> tgt;
    for (const auto& p : usable) {
        src.push_back(model.vocab_.encode(p.source.tokens));
        tgt.push_back(model.vocab_.encode(p.target.tokens));
    }
    auto validation_perplexity = [&]() {
        double nll = 0.0;
        std::size_t tokens = 0;
        for (const auto& p : val) {
            nll += model.loss(p);
            tokens += p.target.size() + 1;
        }
        return std::exp(nll / static_cast<double>(tokens));
    };

    nn::Adam adam(model.params_, {config.learning_rate});
    std::vector<std::size_t> order(src.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::size_t cursor = order.size();

    auto& report = model.report_;
    report.train_pairs = usable.size();
    report.val_pairs = val.size();
    double best = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    std::vector<std::vector<float>> best_params;
    for (std::size_t step = 1; step <= config.max_train_steps; ++step) {
        model.params_.zero_grad();
        std::size_t batch = 0;
        std::size_t tokens = 0;
        while (batch < config.batch_size) {
            if (cursor == order.size()) {
                rng.shuffle(order);
                cursor = 0;
            }
            const std::size_t i = order[cursor++];
            model.train_pair(src[i], tgt[i], tokens);
            ++batch;
            if (batch == order.size()) break;
        }
        model.params_.scale_grad(1.0f / static_cast<float>(batch));
        model.params_.clip_grad_norm(config.grad_clip);
        adam.step(model.params_);
        report.steps_run = step;

        if (val.empty() || (step % config.valid_every != 0 && step != config.max_train_steps)) continue;
        const double ppl = validation_perplexity();
        report.val_perplexity.push_back(ppl);
        if (ppl < best) {
            best = ppl;
            since_best = 0;
            if (config.early_stopping) best_params = model.params_.snapshot();
        } else if (config.early_stopping && ++since_best >= config.patience) {
            report.early_stopped = true;
            break;
        }
    }
    if (!best_params.empty()) model.params_.restore(best_params);
    if (!val.empty()) {
        report.best_val_perplexity = config.early_stopping ? best : report.val_perplexity.back();
        std::vector<TokenList> hyps;
        std::vector<TokenList> refs;
        for (const auto& p : val) {
            hyps.push_back(model.induce(p.source).tokens);
            refs.push_back(p.target.tokens);
        }
        report.held_out_bleu = corpus_bleu(hyps, refs);
    }
    return model;
}

// ---------------------------------------------------------------------------
// PhraseTableInducer
// ---------------------------------------------------------------------------

PhraseTableInducer::PhraseTableInducer(std::map<std::string, std::string, std::less<>> table) : table_(std::move(table)) {
    for (const auto& [source, target] : table_) {
        if (split_spaces(target).empty()) throw ValidationError("phrase table maps '" + source + "' to an empty sentence");
    }
}

Induction PhraseTableInducer::induce(const Utterance& neutral) const {
    const auto it = table_.find(neutral.text());
    if (it == table_.end()) return copy_through(neutral);
    return Induction{split_spaces(it->second), false};
}

PhraseTableInducer PhraseTableInducer::from_json(const nlohmann::json& j) {
    std::map<std::string, std::string, std::less<>> table;
    for (const auto& [source, target] : j.at("table").items()) table[join(split_spaces(source))] = target.get<std::string>();
    return PhraseTableInducer(std::move(table));
}

std::shared_ptr<const Inducer> load_inducer(const std::filesystem::path& sidecar) {
    std::ifstream in(sidecar);
    if (!in) throw IOError("cannot open " + sidecar.string());
    const auto j = nlohmann::json::parse(in);
    const auto kind = j.value("kind", "");
    if (kind == "phrase-table") return std::make_shared<PhraseTableInducer>(PhraseTableInducer::from_json(j));
    if (kind == "seq2seq") return std::make_shared<Seq2SeqInducer>(Seq2SeqInducer::load(sidecar));
    throw CheckpointError("unknown inducer kind '" + kind + "' in " + sidecar.string());
}

}  // namespace sarcgen
