#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace sarcgen::nn {

// Token <-> id map. Specials come first in insertion order; id 0 is <unk>.
class Vocabulary {
public:
    static constexpr std::string_view kUnk = "<unk>";
    static constexpr std::string_view kPad = "<pad>";
    static constexpr std::string_view kBos = "<s>";
    static constexpr std::string_view kEos = "</s>";

    Vocabulary();
    explicit Vocabulary(std::vector<std::string> tokens);

    std::size_t add(std::string_view token);
    std::size_t id(std::string_view token) const;
    bool contains(std::string_view token) const { return index_.count(std::string{token}) != 0; }
    const std::string& token(std::size_t id) const { return tokens_.at(id); }
    std::size_t size() const { return tokens_.size(); }
    std::size_t unk() const { return 0; }

    std::vector<std::size_t> encode(std::span<const std::string> tokens) const;

    nlohmann::json to_json() const { return tokens_; }
    static Vocabulary from_json(const nlohmann::json& j);

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace sarcgen::nn
