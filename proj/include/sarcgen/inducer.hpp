#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sarcgen/bleu.hpp"
#include "sarcgen/neutralizer.hpp"
#include "sarcgen/nn/lstm.hpp"
#include "sarcgen/nn/params.hpp"
#include "sarcgen/nn/vocab.hpp"
#include "sarcgen/text.hpp"

namespace sarcgen {

// <neutral source, positive target>. source == neutralize(target).
struct InductionPair {
    Utterance source;
    Utterance target;
};

// One pair per positive sentence whose neutralization did not collapse.
// Throws EmptyCorpusError when nothing survives.
std::vector<InductionPair> build_induction_pairs(std::span<const Utterance> positive_corpus,
                                                 const AttentionClassifier& neutralizer);

// JSONL, one {"source": ..., "target": ...} per line.
void save_pairs(const std::filesystem::path& path, std::span<const InductionPair> pairs);
std::vector<InductionPair> load_pairs(const std::filesystem::path& path);

struct Induction {
    TokenList tokens;
    // The decoder produced nothing usable and the input was copied through.
    bool copy_fallback = false;

    std::string text() const { return join(tokens); }
};

class Inducer {
public:
    virtual ~Inducer() = default;
    virtual Induction induce(const Utterance& neutral) const = 0;
};

Induction induce_positive(const Inducer& model, const Utterance& neutral);

struct InducerConfig {
    std::size_t embedding_dim = 500;
    std::size_t encoder_layers = 2;
    std::size_t decoder_layers = 2;
    std::size_t hidden_units = 500;
    std::size_t max_train_steps = 100000;
    bool early_stopping = true;
    std::uint64_t seed = 17;
    std::size_t batch_size = 64;
    float learning_rate = 1e-3f;
    float init_scale = 0.1f;
    float grad_clip = 5.0f;
    double validation_fraction = 0.1;
    std::size_t valid_every = 200;
    // Validation rounds without perplexity improvement before stopping.
    std::size_t patience = 4;
    std::size_t beam_width = 1;
    double max_length_ratio = 2.0;

    void validate() const;
};

void to_json(nlohmann::json& j, const InducerConfig& c);
void from_json(const nlohmann::json& j, InducerConfig& c);

struct InducerReport {
    std::size_t steps_run = 0;
    std::vector<double> val_perplexity;
    double best_val_perplexity = 0.0;
    double held_out_bleu = 0.0;
    std::size_t train_pairs = 0;
    std::size_t val_pairs = 0;
    bool early_stopped = false;
};

void to_json(nlohmann::json& j, const InducerReport& r);

// Encoder-decoder LSTM with global (general) attention over the top
// encoder layer. Unknown tokens in the output are replaced by the most
// attended source token.
class Seq2SeqInducer final : public Inducer {
public:
    Seq2SeqInducer(InducerConfig config, nn::Vocabulary vocab);

    Induction induce(const Utterance& neutral) const override;

    // Negative log-likelihood summed over target tokens (incl. </s>).
    double loss(const InductionPair& pair) const;

    const InducerConfig& config() const { return config_; }
    const InducerReport& report() const { return report_; }
    const nn::Vocabulary& vocabulary() const { return vocab_; }

    void save(const std::filesystem::path& stem) const;
    static Seq2SeqInducer load(const std::filesystem::path& sidecar);

private:
    friend Seq2SeqInducer train_inducer(std::span<const InductionPair>, const InducerConfig&);
    struct Encoded;
    struct DecoderState;

    void build();
    Encoded encode(std::span<const std::size_t> src) const;
    // Advances the decoder by one input token; writes log-probs and returns
    // the index of the most attended source position.
    std::size_t decode_step(const Encoded& enc, DecoderState& st, std::size_t input, std::vector<float>& log_probs) const;
    std::vector<std::size_t> greedy(const Encoded& enc, std::size_t max_len, std::vector<std::size_t>& attended) const;
    std::vector<std::size_t> beam(const Encoded& enc, std::size_t max_len, std::vector<std::size_t>& attended) const;
    // Forward + backward for one pair; returns summed NLL and token count.
    double train_pair(std::span<const std::size_t> src, std::span<const std::size_t> tgt, std::size_t& tokens);

    InducerConfig config_;
    nn::Vocabulary vocab_;
    nn::ParameterSet params_;
    nn::ParamId src_emb_ = 0;
    nn::ParamId tgt_emb_ = 0;
    nn::StackedLstm encoder_;
    nn::StackedLstm decoder_;
    nn::ParamId att_w_ = 0;
    nn::ParamId comb_w_ = 0;
    nn::ParamId comb_b_ = 0;
    nn::ParamId out_w_ = 0;
    nn::ParamId out_b_ = 0;
    InducerReport report_;
};

// Holds out validation_fraction of the pairs for early stopping and for the
// reported held-out BLEU. Throws DegenerateCorpusError for < 2 pairs or an
// empty vocabulary.
Seq2SeqInducer train_inducer(std::span<const InductionPair> pairs, const InducerConfig& config);

// Exact-match lookup from neutral text to positive text; anything else is
// copied through with the fallback flag.
class PhraseTableInducer final : public Inducer {
public:
    explicit PhraseTableInducer(std::map<std::string, std::string, std::less<>> table);

    Induction induce(const Utterance& neutral) const override;

    static PhraseTableInducer from_json(const nlohmann::json& j);

private:
    std::map<std::string, std::string, std::less<>> table_;
};

// Loads either kind from its sidecar ("kind": "seq2seq" or "phrase-table").
std::shared_ptr<const Inducer> load_inducer(const std::filesystem::path& sidecar);

}  // namespace sarcgen
