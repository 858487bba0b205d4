#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sarcgen/backends.hpp"

namespace sarcgen {

inline constexpr std::size_t kEmojiCount = 32;

struct EmojiEntry {
    std::size_t index = 0;
    std::vector<char32_t> codepoints;
    std::string shortname;

    std::string utf8() const;
};

// Exactly 32 labels with indices 0..31. File format: JSON array of
// {"index": n, "codepoints": ["1F602", ...], "shortname": s}.
class EmojiVocabulary {
public:
    explicit EmojiVocabulary(std::vector<EmojiEntry> entries);

    static EmojiVocabulary load(const std::filesystem::path& path);
    static EmojiVocabulary from_json(const nlohmann::json& j);

    std::size_t size() const { return entries_.size(); }
    // Throws ContractError for an index outside 0..31.
    const EmojiEntry& at(std::size_t index) const;
    std::optional<std::size_t> find_shortname(std::string_view name) const;

private:
    std::vector<EmojiEntry> entries_;
};

struct EmojiPrediction {
    std::size_t label_index = 0;
    std::vector<double> distribution;
};

// input + " " + context, or input alone. Throws PreconditionError on an
// empty input.
std::string build_prediction_text(const std::string& input, const std::optional<std::string>& context);

// Normalizes the backend scores into a distribution; argmax takes the lowest
// index on ties. Throws ContractError unless the backend returns one finite,
// non-negative score per label with a positive sum.
EmojiPrediction predict_emoji(const EmojiBackend& backend, const std::string& text, const EmojiVocabulary& vocabulary);

// Appends the emoji directly after the sentence, no space.
std::string attach_emoji(const std::string& sentence, std::size_t label_index, const EmojiVocabulary& vocabulary);
std::string attach_emoji(const std::string& sentence, const EmojiPrediction& prediction, const EmojiVocabulary& vocabulary);

// Removes one trailing vocabulary emoji, if present.
std::string strip_last_emoji(const std::string& text, const EmojiVocabulary& vocabulary);

// Non-overlapping occurrences of vocabulary emoji, longest match first.
std::size_t count_emoji(std::string_view text, const EmojiVocabulary& vocabulary);

// True when the text ends with a vocabulary emoji.
bool ends_with_emoji(std::string_view text, const EmojiVocabulary& vocabulary);

std::string encode_utf8(char32_t cp);

}  // namespace sarcgen
