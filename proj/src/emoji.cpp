#include "sarcgen/emoji.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "sarcgen/errors.hpp"

namespace sarcgen {
namespace {

bool valid_scalar(char32_t cp) { return cp <= 0x10FFFF && (cp < 0xD800 || cp > 0xDFFF) && cp != 0; }

char32_t parse_codepoint(const std::string& hex) {
    std::size_t used = 0;
    unsigned long v = 0;
    try {
        v = std::stoul(hex, &used, 16);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != hex.size() || !valid_scalar(static_cast<char32_t>(v)) || v > 0x10FFFF) {
        throw ValidationError("invalid codepoint '" + hex + "'");
    }
    return static_cast<char32_t>(v);
}

// Length of the longest vocabulary emoji starting at text[pos], 0 if none.
std::size_t match_at(std::string_view text, std::size_t pos, const std::vector<std::string>& encoded) {
    std::size_t best = 0;
    for (const auto& e : encoded) {
        if (e.size() > best && text.substr(pos, e.size()) == e) best = e.size();
    }
    return best;
}

std::vector<std::string> encoded_forms(const EmojiVocabulary& vocabulary) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < vocabulary.size(); ++i) out.push_back(vocabulary.at(i).utf8());
    return out;
}

}  // namespace

std::string encode_utf8(char32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return out;
}

std::string EmojiEntry::utf8() const {
    std::string out;
    for (char32_t cp : codepoints) out += encode_utf8(cp);
    return out;
}

EmojiVocabulary::EmojiVocabulary(std::vector<EmojiEntry> entries) : entries_(std::move(entries)) {
    if (entries_.size() != kEmojiCount) {
        throw ValidationError("emoji vocabulary must have exactly 32 entries, got " + std::to_string(entries_.size()));
    }
    std::sort(entries_.begin(), entries_.end(), [](const EmojiEntry& a, const EmojiEntry& b) { return a.index < b.index; });
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].index != i) throw ValidationError("emoji indices must be 0..31 without gaps or repeats");
        if (entries_[i].codepoints.empty()) throw ValidationError("emoji " + std::to_string(i) + " has no codepoints");
        for (char32_t cp : entries_[i].codepoints) {
            if (!valid_scalar(cp)) throw ValidationError("emoji " + std::to_string(i) + " has an invalid codepoint");
        }
    }
}

EmojiVocabulary EmojiVocabulary::from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ValidationError("emoji vocabulary must be a JSON array");
    std::vector<EmojiEntry> entries;
    for (const auto& e : j) {
        EmojiEntry entry;
        entry.index = e.at("index").get<std::size_t>();
        for (const auto& cp : e.at("codepoints")) entry.codepoints.push_back(parse_codepoint(cp.get<std::string>()));
        entry.shortname = e.value("shortname", "");
        entries.push_back(std::move(entry));
    }
    return EmojiVocabulary(std::move(entries));
}

EmojiVocabulary EmojiVocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

const EmojiEntry& EmojiVocabulary::at(std::size_t index) const {
    if (index >= entries_.size()) throw ContractError("emoji index " + std::to_string(index) + " out of range");
    return entries_[index];
}

std::optional<std::size_t> EmojiVocabulary::find_shortname(std::string_view name) const {
    for (const auto& e : entries_) {
        if (e.shortname == name) return e.index;
    }
    return std::nullopt;
}

std::string build_prediction_text(const std::string& input, const std::optional<std::string>& context) {
    if (input.empty()) throw PreconditionError("emoji prediction needs a non-empty input");
    if (!context || context->empty()) return input;
    return input + " " + *context;
}

EmojiPrediction predict_emoji(const EmojiBackend& backend, const std::string& text, const EmojiVocabulary& vocabulary) {
    if (text.empty()) throw PreconditionError("emoji prediction needs non-empty text");
    auto scores = backend.emoji_scores(text);
    if (scores.size() != vocabulary.size()) {
        throw ContractError("emoji backend returned " + std::to_string(scores.size()) + " scores, expected " +
                            std::to_string(vocabulary.size()));
    }
    double total = 0.0;
    for (double s : scores) {
        if (!std::isfinite(s) || s < 0.0) throw ContractError("emoji scores must be finite and non-negative");
        total += s;
    }
    if (!(total > 0.0)) throw ContractError("emoji scores sum to zero");
    EmojiPrediction p;
    p.distribution.reserve(scores.size());
    for (double s : scores) p.distribution.push_back(s / total);
    p.label_index = static_cast<std::size_t>(std::max_element(p.distribution.begin(), p.distribution.end()) -
                                             p.distribution.begin());
    return p;
}

std::string attach_emoji(const std::string& sentence, std::size_t label_index, const EmojiVocabulary& vocabulary) {
    if (sentence.empty()) throw PreconditionError("cannot attach an emoji to an empty sentence");
    return sentence + vocabulary.at(label_index).utf8();
}

std::string attach_emoji(const std::string& sentence, const EmojiPrediction& prediction, const EmojiVocabulary& vocabulary) {
    return attach_emoji(sentence, prediction.label_index, vocabulary);
}

std::string strip_last_emoji(const std::string& text, const EmojiVocabulary& vocabulary) {
    std::size_t best = 0;
    for (const auto& e : encoded_forms(vocabulary)) {
        if (e.size() > best && text.size() >= e.size() && text.compare(text.size() - e.size(), e.size(), e) == 0) best = e.size();
    }
    return text.substr(0, text.size() - best);
}

std::size_t count_emoji(std::string_view text, const EmojiVocabulary& vocabulary) {
    const auto encoded = encoded_forms(vocabulary);
    std::size_t count = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t len = match_at(text, pos, encoded);
        if (len == 0) {
            ++pos;
        } else {
            ++count;
            pos += len;
        }
    }
    return count;
}

bool ends_with_emoji(std::string_view text, const EmojiVocabulary& vocabulary) {
    return strip_last_emoji(std::string{text}, vocabulary).size() < text.size();
}

}  // namespace sarcgen
