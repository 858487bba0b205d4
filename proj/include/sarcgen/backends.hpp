#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace sarcgen {

// Wrappers around the pretrained models the generator consults. Every
// implementation is safe to call from several threads at once.
//
// Wire contract shared by all remote backends: HTTP POST with body
// {"task": <task>, "inputs": {...}}, reply {"outputs": {...}, "model_id": s}.
//
//   task      inputs                           outputs
//   xeffect   {"sentence": s}                  {"phrases": [s, ...]}
//   retrieve  {"keyword": s}                   {"sentences": [s, ...]}
//   generate  {"concepts": [s, ...]}           {"sentence": s}
//   nli       {"premise": s, "hypothesis": s}  {"entailment": p, "neutral": p, "contradiction": p}
//   emoji     {"text": s}                      {"scores": [32 reals]}

class CommonsenseBackend {
public:
    virtual ~CommonsenseBackend() = default;
    // xEffect phrases, best first.
    virtual std::vector<std::string> xeffect(const std::string& sentence) const = 0;
};

class RetrievalBackend {
public:
    virtual ~RetrievalBackend() = default;
    virtual std::vector<std::string> retrieve(const std::string& keyword) const = 0;
};

class GenerationBackend {
public:
    virtual ~GenerationBackend() = default;
    virtual std::string generate(const std::vector<std::string>& concepts) const = 0;
};

struct NliScores {
    double entailment = 0.0;
    double neutral = 0.0;
    double contradiction = 0.0;
};

class NliBackend {
public:
    virtual ~NliBackend() = default;
    virtual NliScores nli(const std::string& premise, const std::string& hypothesis) const = 0;
};

class EmojiBackend {
public:
    virtual ~EmojiBackend() = default;
    // Unnormalized or normalized scores, one per emoji label.
    virtual std::vector<double> emoji_scores(const std::string& text) const = 0;
};

// Handles one request in the wire format; used by the stub server.
nlohmann::json dispatch_request(const nlohmann::json& request, const CommonsenseBackend& commonsense,
                                const RetrievalBackend& retrieval, const GenerationBackend& generation,
                                const NliBackend& nli, const EmojiBackend& emoji, std::string_view model_id);

// ---------------------------------------------------------------------------

// Fixture-driven stand-in for every backend. The fixture is one JSON object:
//
//   "xeffect":  {sentence: [phrase, ...]}
//   "retrieve": {keyword: [sentence, ...]}
//   "generate": {"<concept 1> | <concept 2>": sentence}
//   "nli":      {"<premise> || <hypothesis>": [e, n, c]}
//   "emoji":    {text: label index or [32 scores]}
//
// Unlisted inputs fall back to deterministic rules: xeffect picks from
// "xeffect_fallback" (empty if absent) by FNV-1a hash of the sentence,
// retrieve returns nothing, generate joins the concepts, nli returns
// "nli_default" or a hash-derived distribution, emoji is one-hot at
// hash % 32.
class StubBackend final : public CommonsenseBackend,
                          public RetrievalBackend,
                          public GenerationBackend,
                          public NliBackend,
                          public EmojiBackend {
public:
    explicit StubBackend(nlohmann::json fixture);
    static StubBackend load(const std::filesystem::path& path);

    std::vector<std::string> xeffect(const std::string& sentence) const override;
    std::vector<std::string> retrieve(const std::string& keyword) const override;
    std::string generate(const std::vector<std::string>& concepts) const override;
    NliScores nli(const std::string& premise, const std::string& hypothesis) const override;
    std::vector<double> emoji_scores(const std::string& text) const override;

    static std::string generate_key(const std::vector<std::string>& concepts);
    static std::string nli_key(const std::string& premise, const std::string& hypothesis);

private:
    nlohmann::json fixture_;
};

std::uint64_t fnv1a(std::string_view s);

// Retrieval corpus file: JSON object keyword -> [sentences].
class LocalRetrievalBackend final : public RetrievalBackend {
public:
    explicit LocalRetrievalBackend(std::map<std::string, std::vector<std::string>, std::less<>> index);
    static LocalRetrievalBackend load(const std::filesystem::path& path);

    std::vector<std::string> retrieve(const std::string& keyword) const override;

private:
    std::map<std::string, std::vector<std::string>, std::less<>> index_;
};

struct RemoteConfig {
    std::string url;  // scheme://host[:port]
    std::string path = "/";
    int timeout_ms = 10000;
    int retries = 2;
};

void from_json(const nlohmann::json& j, RemoteConfig& c);

// HTTP client for the wire contract. Transport failures, non-200 replies
// and malformed bodies are retried, then reported as BackendError.
class RemoteBackend final : public CommonsenseBackend,
                            public RetrievalBackend,
                            public GenerationBackend,
                            public NliBackend,
                            public EmojiBackend {
public:
    explicit RemoteBackend(RemoteConfig config);

    std::vector<std::string> xeffect(const std::string& sentence) const override;
    std::vector<std::string> retrieve(const std::string& keyword) const override;
    std::string generate(const std::vector<std::string>& concepts) const override;
    NliScores nli(const std::string& premise, const std::string& hypothesis) const override;
    std::vector<double> emoji_scores(const std::string& text) const override;

    // Sends one request and returns its "outputs" object.
    nlohmann::json call(std::string_view task, const nlohmann::json& inputs) const;

private:
    RemoteConfig config_;
};

struct BackendSuite {
    std::shared_ptr<const CommonsenseBackend> commonsense;
    std::shared_ptr<const RetrievalBackend> retrieval;
    std::shared_ptr<const GenerationBackend> generation;
    std::shared_ptr<const NliBackend> nli;
    std::shared_ptr<const EmojiBackend> emoji;
};

// Every slot served by one stub fixture; a separate retrieval corpus file
// replaces the stub's "retrieve" section when given.
BackendSuite make_stub_suite(const std::filesystem::path& fixture, const std::filesystem::path& retrieval_corpus = {});

// Config file: {"xeffect": RemoteConfig, "retrieve": RemoteConfig | {"corpus": path},
// "generate": ..., "nli": ..., "emoji": ...}. A "default" entry fills
// missing slots. Relative corpus paths resolve against the config's folder.
BackendSuite make_remote_suite(const std::filesystem::path& config);

}  // namespace sarcgen
