#include "sarcgen/backends.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "sarcgen/errors.hpp"

namespace sarcgen {
namespace {

constexpr std::size_t kEmojiLabels = 32;

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::vector<std::string> string_list(const nlohmann::json& j, std::string_view what) {
    if (!j.is_array()) throw BackendError(std::string{what} + " must be a list of strings");
    std::vector<std::string> out;
    for (const auto& v : j) {
        if (!v.is_string()) throw BackendError(std::string{what} + " must be a list of strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

NliScores nli_from_json(const nlohmann::json& j) {
    if (j.is_array() && j.size() == 3) return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
    if (j.is_object()) return {j.at("entailment").get<double>(), j.at("neutral").get<double>(), j.at("contradiction").get<double>()};
    throw BackendError("nli scores must be [e, n, c] or an object with entailment/neutral/contradiction");
}

}  // namespace

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

nlohmann::json dispatch_request(const nlohmann::json& request, const CommonsenseBackend& commonsense,
                                const RetrievalBackend& retrieval, const GenerationBackend& generation,
                                const NliBackend& nli, const EmojiBackend& emoji, std::string_view model_id) {
    const auto task = request.at("task").get<std::string>();
    const auto& in = request.at("inputs");
    nlohmann::json out;
    if (task == "xeffect") {
        out["phrases"] = commonsense.xeffect(in.at("sentence").get<std::string>());
    } else if (task == "retrieve") {
        out["sentences"] = retrieval.retrieve(in.at("keyword").get<std::string>());
    } else if (task == "generate") {
        out["sentence"] = generation.generate(in.at("concepts").get<std::vector<std::string>>());
    } else if (task == "nli") {
        const auto s = nli.nli(in.at("premise").get<std::string>(), in.at("hypothesis").get<std::string>());
        out = {{"entailment", s.entailment}, {"neutral", s.neutral}, {"contradiction", s.contradiction}};
    } else if (task == "emoji") {
        out["scores"] = emoji.emoji_scores(in.at("text").get<std::string>());
    } else {
        throw ValidationError("unknown task '" + task + "'");
    }
    return {{"outputs", out}, {"model_id", model_id}};
}

// ---------------------------------------------------------------------------
// StubBackend
// ---------------------------------------------------------------------------

StubBackend::StubBackend(nlohmann::json fixture) : fixture_(std::move(fixture)) {
    if (!fixture_.is_object()) throw ValidationError("stub fixture must be a JSON object");
}

StubBackend StubBackend::load(const std::filesystem::path& path) { return StubBackend(read_json(path)); }

std::string StubBackend::generate_key(const std::vector<std::string>& concepts) {
    std::string key;
    for (std::size_t i = 0; i < concepts.size(); ++i) {
        if (i != 0) key += " | ";
        key += concepts[i];
    }
    return key;
}

std::string StubBackend::nli_key(const std::string& premise, const std::string& hypothesis) {
    return premise + " || " + hypothesis;
}

std::vector<std::string> StubBackend::xeffect(const std::string& sentence) const {
    if (auto it = fixture_.find("xeffect"); it != fixture_.end() && it->contains(sentence)) {
        return string_list((*it)[sentence], "xeffect phrases");
    }
    if (auto it = fixture_.find("xeffect_fallback"); it != fixture_.end() && !it->empty()) {
        const auto pool = string_list(*it, "xeffect_fallback");
        return {pool[fnv1a(sentence) % pool.size()]};
    }
    return {};
}

std::vector<std::string> StubBackend::retrieve(const std::string& keyword) const {
    if (auto it = fixture_.find("retrieve"); it != fixture_.end() && it->contains(keyword)) {
        return string_list((*it)[keyword], "retrieved sentences");
    }
    return {};
}

std::string StubBackend::generate(const std::vector<std::string>& concepts) const {
    const auto key = generate_key(concepts);
    if (auto it = fixture_.find("generate"); it != fixture_.end() && it->contains(key)) {
        return (*it)[key].get<std::string>();
    }
    std::string joined;
    for (const auto& c : concepts) {
        if (!joined.empty()) joined += ' ';
        joined += c;
    }
    return joined;
}

NliScores StubBackend::nli(const std::string& premise, const std::string& hypothesis) const {
    const auto key = nli_key(premise, hypothesis);
    if (auto it = fixture_.find("nli"); it != fixture_.end() && it->contains(key)) return nli_from_json((*it)[key]);
    if (auto it = fixture_.find("nli_default"); it != fixture_.end()) return nli_from_json(*it);
    // Three weights in 1..256 from disjoint hash bytes.
    const auto h = fnv1a(key);
    const double w[3] = {1.0 + static_cast<double>(h & 0xff), 1.0 + static_cast<double>((h >> 8) & 0xff),
                         1.0 + static_cast<double>((h >> 16) & 0xff)};
    const double z = w[0] + w[1] + w[2];
    return {w[0] / z, w[1] / z, w[2] / z};
}

std::vector<double> StubBackend::emoji_scores(const std::string& text) const {
    if (auto it = fixture_.find("emoji"); it != fixture_.end() && it->contains(text)) {
        const auto& v = (*it)[text];
        if (v.is_array()) return v.get<std::vector<double>>();
        const auto index = v.get<std::size_t>();
        std::vector<double> scores(kEmojiLabels, 0.0);
        if (index >= kEmojiLabels) throw BackendError("stub emoji label out of range");
        scores[index] = 1.0;
        return scores;
    }
    std::vector<double> scores(kEmojiLabels, 0.0);
    scores[fnv1a(text) % kEmojiLabels] = 1.0;
    return scores;
}

// ---------------------------------------------------------------------------
// LocalRetrievalBackend
// ---------------------------------------------------------------------------

LocalRetrievalBackend::LocalRetrievalBackend(std::map<std::string, std::vector<std::string>, std::less<>> index)
    : index_(std::move(index)) {}

LocalRetrievalBackend LocalRetrievalBackend::load(const std::filesystem::path& path) {
    const auto j = read_json(path);
    if (!j.is_object()) throw ValidationError(path.string() + ": retrieval corpus must map keywords to sentence lists");
    std::map<std::string, std::vector<std::string>, std::less<>> index;
    for (const auto& [keyword, sentences] : j.items()) index[keyword] = string_list(sentences, "retrieval corpus entry");
    return LocalRetrievalBackend(std::move(index));
}

std::vector<std::string> LocalRetrievalBackend::retrieve(const std::string& keyword) const {
    const auto it = index_.find(keyword);
    return it == index_.end() ? std::vector<std::string>{} : it->second;
}

// ---------------------------------------------------------------------------
// RemoteBackend
// ---------------------------------------------------------------------------

void from_json(const nlohmann::json& j, RemoteConfig& c) {
    RemoteConfig d;
    c.url = j.at("url").get<std::string>();
    c.path = j.value("path", d.path);
    c.timeout_ms = j.value("timeout_ms", d.timeout_ms);
    c.retries = j.value("retries", d.retries);
    if (c.timeout_ms <= 0 || c.retries < 0) throw ValidationError("timeout_ms must be positive and retries non-negative");
}

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
    if (config_.url.empty()) throw ValidationError("remote backend needs a url");
}

nlohmann::json RemoteBackend::call(std::string_view task, const nlohmann::json& inputs) const {
    const nlohmann::json request{{"task", task}, {"inputs", inputs}};
    const auto body = request.dump();
    const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
        httplib::Client client(config_.url);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        auto res = client.Post(config_.path, body, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        try {
            auto reply = nlohmann::json::parse(res->body);
            if (!reply.contains("outputs") || !reply["outputs"].is_object()) {
                last_error = "reply has no outputs object";
                continue;
            }
            return reply["outputs"];
        } catch (const nlohmann::json::exception& e) {
            last_error = e.what();
        }
    }
    throw BackendError(std::string{task} + " request to " + config_.url + " failed: " + last_error);
}

std::vector<std::string> RemoteBackend::xeffect(const std::string& sentence) const {
    const auto out = call("xeffect", {{"sentence", sentence}});
    return string_list(out.value("phrases", nlohmann::json::array()), "xeffect phrases");
}

std::vector<std::string> RemoteBackend::retrieve(const std::string& keyword) const {
    const auto out = call("retrieve", {{"keyword", keyword}});
    return string_list(out.value("sentences", nlohmann::json::array()), "retrieved sentences");
}

std::string RemoteBackend::generate(const std::vector<std::string>& concepts) const {
    const auto out = call("generate", {{"concepts", concepts}});
    if (!out.contains("sentence") || !out["sentence"].is_string()) throw BackendError("generate reply has no sentence");
    return out["sentence"].get<std::string>();
}

NliScores RemoteBackend::nli(const std::string& premise, const std::string& hypothesis) const {
    const auto out = call("nli", {{"premise", premise}, {"hypothesis", hypothesis}});
    try {
        return nli_from_json(out);
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string{"malformed nli reply: "} + e.what());
    }
}

std::vector<double> RemoteBackend::emoji_scores(const std::string& text) const {
    const auto out = call("emoji", {{"text", text}});
    try {
        return out.at("scores").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string{"malformed emoji reply: "} + e.what());
    }
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

BackendSuite make_stub_suite(const std::filesystem::path& fixture, const std::filesystem::path& retrieval_corpus) {
    auto stub = std::make_shared<const StubBackend>(StubBackend::load(fixture));
    BackendSuite suite{stub, stub, stub, stub, stub};
    if (!retrieval_corpus.empty()) {
        suite.retrieval = std::make_shared<const LocalRetrievalBackend>(LocalRetrievalBackend::load(retrieval_corpus));
    }
    return suite;
}

BackendSuite make_remote_suite(const std::filesystem::path& config) {
    const auto j = read_json(config);
    auto slot = [&](const char* name) -> nlohmann::json {
        if (j.contains(name)) return j[name];
        if (j.contains("default")) return j["default"];
        throw ValidationError(config.string() + ": no backend configured for '" + name + "'");
    };
    auto remote = [&](const char* name) { return std::make_shared<const RemoteBackend>(slot(name).get<RemoteConfig>()); };

    BackendSuite suite;
    suite.commonsense = remote("xeffect");
    suite.generation = remote("generate");
    suite.nli = remote("nli");
    suite.emoji = remote("emoji");
    const auto retrieval = slot("retrieve");
    if (retrieval.contains("corpus")) {
        std::filesystem::path corpus = retrieval["corpus"].get<std::string>();
        if (corpus.is_relative()) corpus = config.parent_path() / corpus;
        suite.retrieval = std::make_shared<const LocalRetrievalBackend>(LocalRetrievalBackend::load(corpus));
    } else {
        suite.retrieval = std::make_shared<const RemoteBackend>(retrieval.get<RemoteConfig>());
    }
    return suite;
}

}  // namespace sarcgen
