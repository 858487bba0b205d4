#include "sarcgen/nn/vocab.hpp"

#include "sarcgen/errors.hpp"

namespace sarcgen::nn {

Vocabulary::Vocabulary() { add(kUnk); }

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
    if (tokens.empty() || tokens.front() != kUnk) throw CheckpointError("vocabulary must start with <unk>");
    for (auto& t : tokens) add(t);
}

std::size_t Vocabulary::add(std::string_view token) {
    std::string key{token};
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    const std::size_t id = tokens_.size();
    tokens_.push_back(key);
    index_.emplace(std::move(key), id);
    return id;
}

std::size_t Vocabulary::id(std::string_view token) const {
    auto it = index_.find(std::string{token});
    return it == index_.end() ? unk() : it->second;
}

std::vector<std::size_t> Vocabulary::encode(std::span<const std::string> tokens) const {
    std::vector<std::size_t> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id(t));
    return ids;
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
    return Vocabulary{j.get<std::vector<std::string>>()};
}

}  // namespace sarcgen::nn
