#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sarcgen/nn/lstm.hpp"
#include "sarcgen/nn/params.hpp"
#include "sarcgen/nn/vocab.hpp"
#include "sarcgen/text.hpp"

namespace sarcgen {

struct SentimentPrediction {
    Polarity label = Polarity::unknown;
    double probability = 0.0;  // of the predicted label
};

// A sentiment classifier that exposes one non-negative attention weight per
// token. Implementations are immutable after construction and safe to share
// across threads.
class AttentionClassifier {
public:
    virtual ~AttentionClassifier() = default;
    virtual SentimentPrediction classify(std::span<const std::string> tokens) const = 0;
    virtual std::vector<float> attention(std::span<const std::string> tokens) const = 0;
};

SentimentPrediction classify_sentiment(const AttentionClassifier& model, const Utterance& utterance);

struct AttentionVector {
    std::vector<float> weights;
};

AttentionVector extract_attention(const AttentionClassifier& model, const Utterance& utterance);

inline constexpr float kDefaultThresholdFactor = 0.95f;

// keep[i] == 0 exactly when a[i] > factor * max(a).
struct AttentionMask {
    std::vector<std::uint8_t> keep;
    float threshold_factor = kDefaultThresholdFactor;
};

AttentionMask discretize_attention(std::span<const float> attention, float threshold_factor = kDefaultThresholdFactor);

struct NeutralizationResult {
    Utterance utterance;
    AttentionMask mask;
    std::vector<float> attention;
    // Set when the mask removed every token and the lowest-attention token
    // was kept instead.
    bool degenerate = false;
};

NeutralizationResult neutralize(const AttentionClassifier& model, const Utterance& utterance,
                                float threshold_factor = kDefaultThresholdFactor);

// Applies a mask; all-removed masks fall back to the first minimum-attention token.
NeutralizationResult apply_mask(const Utterance& utterance, std::span<const float> attention,
                                const AttentionMask& mask);

struct ClassifierConfig {
    std::size_t embedding_dim = 100;
    std::size_t recurrent_units_1 = 200;
    std::size_t recurrent_units_2 = 150;
    std::size_t attention_dim = 100;
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    int negative_label = 1;
    int positive_label = 0;
    std::uint64_t seed = 13;
    float learning_rate = 0.003f;
    float init_scale = 0.1f;
    float grad_clip = 5.0f;
    double validation_fraction = 0.1;
    // Stop when validation accuracy has not improved for this many epochs.
    std::size_t patience = 2;

    void validate() const;
};

void to_json(nlohmann::json& j, const ClassifierConfig& c);
void from_json(const nlohmann::json& j, ClassifierConfig& c);

struct ClassifierReport {
    std::vector<double> epoch_loss;
    std::vector<double> epoch_val_accuracy;
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
    std::optional<double> test_accuracy;
    std::size_t epochs_run = 0;
    bool early_stopped = false;
};

void to_json(nlohmann::json& j, const ClassifierReport& r);

// Embedding -> LSTM -> additive self-attention -> LSTM -> softmax.
// Attention scores come from the first LSTM's states; the second LSTM reads
// the token embeddings scaled by n * a_t, so only attended words reach the
// decision and uniform attention passes the embeddings through unchanged.
class SentimentModel final : public AttentionClassifier {
public:
    SentimentModel(ClassifierConfig config, nn::Vocabulary vocab);

    SentimentPrediction classify(std::span<const std::string> tokens) const override;
    std::vector<float> attention(std::span<const std::string> tokens) const override;

    const ClassifierConfig& config() const { return config_; }
    const nn::Vocabulary& vocabulary() const { return vocab_; }
    const ClassifierReport& report() const { return report_; }

    // Writes <stem>.bin and <stem>.json.
    void save(const std::filesystem::path& stem) const;
    static SentimentModel load(const std::filesystem::path& sidecar);

private:
    friend SentimentModel train_sentiment_classifier(std::span<const Utterance>, std::span<const Utterance>,
                                                     const ClassifierConfig&);
    struct Trace;

    void build();
    // Returns p(negative) and fills trace when given.
    float forward(std::span<const std::size_t> ids, Trace* trace) const;
    void backward(const Trace& trace, int target_class);

    ClassifierConfig config_;
    nn::Vocabulary vocab_;
    nn::ParameterSet params_;
    nn::ParamId embedding_ = 0;
    nn::Lstm lstm1_;
    nn::ParamId att_w_ = 0;
    nn::ParamId att_b_ = 0;
    nn::ParamId att_v_ = 0;
    nn::Lstm lstm2_;
    nn::ParamId out_w_ = 0;
    nn::ParamId out_b_ = 0;
    ClassifierReport report_;
};

// Trains on utterances whose polarity is positive or negative. A validation
// slice is carved from `train`; `test` (may be empty) is only scored.
SentimentModel train_sentiment_classifier(std::span<const Utterance> train, std::span<const Utterance> test,
                                          const ClassifierConfig& config);

double accuracy(const AttentionClassifier& model, std::span<const Utterance> data);

// Word-list model: attention is each token's lexicon weight (default weight
// for unlisted tokens) normalized to sum 1; the label is the sign of the
// summed polarities. Serves as a transparent fixture model.
class LexiconSentimentModel final : public AttentionClassifier {
public:
    struct Entry {
        float weight = 1.0f;
        float polarity = 0.0f;
    };

    LexiconSentimentModel(std::map<std::string, Entry, std::less<>> entries, float default_weight);

    SentimentPrediction classify(std::span<const std::string> tokens) const override;
    std::vector<float> attention(std::span<const std::string> tokens) const override;

    static LexiconSentimentModel from_json(const nlohmann::json& j);

private:
    std::map<std::string, Entry, std::less<>> entries_;
    float default_weight_;
};

// Loads either model kind from its JSON sidecar ("kind": "lstm-attention" or "lexicon").
std::shared_ptr<const AttentionClassifier> load_neutralizer(const std::filesystem::path& sidecar);

}  // namespace sarcgen
