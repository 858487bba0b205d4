#include "sarcgen/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "sarcgen/errors.hpp"

namespace sarcgen {
namespace {

bool is_ascii_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
// Non-ASCII bytes count as word characters so UTF-8 sequences stay intact.
bool is_word_char(char c) { return !is_space(c) && !is_ascii_punct(c); }

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string{s.substr(b, e - b)};
}

bool is_tag_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

// Drops @mentions and the '#' of hashtags. A lone marker is dropped too.
std::string strip_social_marks(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    std::size_t i = 0;
    while (i < raw.size()) {
        const char c = raw[i];
        const bool at_boundary = i == 0 || !is_tag_char(raw[i - 1]);
        if ((c == '@' || c == '#') && at_boundary) {
            std::size_t j = i + 1;
            while (j < raw.size() && is_tag_char(raw[j])) ++j;
            if (c == '#') out.append(raw.substr(i + 1, j - i - 1));
            i = j;
            continue;
        }
        out.push_back(c);
        ++i;
    }
    return out;
}

}  // namespace

std::string lower_ascii(std::string_view s) {
    std::string out{s};
    for (char& c : out) {
        if (static_cast<unsigned char>(c) < 128) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::string_view to_string(Polarity p) {
    switch (p) {
        case Polarity::positive: return "positive";
        case Polarity::negative: return "negative";
        case Polarity::unknown: break;
    }
    return "unknown";
}

Polarity polarity_from_string(std::string_view s) {
    if (s == "positive" || s == "pos" || s == "0") return Polarity::positive;
    if (s == "negative" || s == "neg" || s == "1") return Polarity::negative;
    return Polarity::unknown;
}

std::string Utterance::text() const { return join(tokens); }

NormalizationTable::NormalizationTable(std::map<std::string, std::string> entries) {
    for (auto& [variant, canonical] : entries) {
        entries_.emplace(lower_ascii(variant), lower_ascii(canonical));
    }
    for (const auto& [variant, canonical] : entries_) {
        for (const auto& tok : tokenize(canonical)) {
            if (entries_.count(tok) != 0) {
                throw ValidationError("normalization table: canonical form '" + canonical +
                                      "' contains variant '" + tok + "'");
            }
        }
    }
}

NormalizationTable NormalizationTable::load_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open normalization table " + path.string());
    std::map<std::string, std::string> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected two tab-separated columns");
        }
        entries[trim(line.substr(0, tab))] = trim(line.substr(tab + 1));
    }
    return NormalizationTable{std::move(entries)};
}

const std::string* NormalizationTable::lookup(std::string_view token) const {
    auto it = entries_.find(token);
    return it == entries_.end() ? nullptr : &it->second;
}

std::string Normalizer::operator()(std::string_view raw) const {
    const auto tokens = tokenize(lower_ascii(strip_social_marks(raw)));
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& tok : tokens) {
        if (tok == "#" || tok == "@") continue;
        if (const auto* canonical = table.lookup(tok)) {
            for (auto& piece : tokenize(*canonical)) out.push_back(std::move(piece));
            continue;
        }
        if (corrector && !is_punctuation(tok)) {
            for (auto& piece : tokenize(lower_ascii(corrector(tok)))) out.push_back(std::move(piece));
            continue;
        }
        out.push_back(tok);
    }
    if (out.empty()) throw EmptyTextError("text is empty after normalization");
    return join(out);
}

std::string normalize_text(std::string_view raw, const Normalizer& normalizer) { return normalizer(raw); }

std::string normalize_text(std::string_view raw) {
    static const Normalizer identity{};
    return identity(raw);
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const char c = text[i];
        if (is_space(c)) {
            ++i;
            continue;
        }
        if (is_ascii_punct(c)) {
            std::size_t j = i + 1;
            while (j < n && text[j] == c) ++j;
            tokens.emplace_back(text.substr(i, j - i));
            i = j;
            continue;
        }
        std::size_t j = i + 1;
        while (j < n) {
            if (is_word_char(text[j])) {
                ++j;
            } else if ((text[j] == '\'' || text[j] == '-') && j + 1 < n && is_word_char(text[j + 1])) {
                j += 2;
            } else {
                break;
            }
        }
        tokens.emplace_back(text.substr(i, j - i));
        i = j;
    }
    return tokens;
}

std::string join(std::span<const std::string> tokens, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i != 0) out.append(sep);
        out.append(tokens[i]);
    }
    return out;
}

bool is_punctuation(std::string_view token) {
    if (token.empty()) return false;
    for (char c : token) {
        if (!is_ascii_punct(c)) return false;
    }
    return true;
}

std::size_t word_count(std::span<const std::string> tokens) {
    std::size_t n = 0;
    for (const auto& t : tokens) n += is_punctuation(t) ? 0 : 1;
    return n;
}

Utterance make_utterance(std::string_view raw, Polarity polarity, const Normalizer& normalizer) {
    Utterance u;
    u.original = std::string{raw};
    u.tokens = tokenize(normalizer(raw));
    u.polarity = polarity;
    return u;
}

Utterance make_utterance(std::string_view raw, Polarity polarity) {
    static const Normalizer identity{};
    return make_utterance(raw, polarity, identity);
}

std::vector<RawRecord> load_sentiment_corpus(const std::filesystem::path& path, Polarity polarity) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open corpus " + path.string());
    std::vector<RawRecord> records;
    std::string line;
    std::size_t lineno = 0;
    const std::string stem = path.filename().string();
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        auto text = trim(line);
        if (text.empty()) continue;
        records.push_back({std::move(text), polarity, stem + ":" + std::to_string(lineno)});
    }
    if (records.empty()) throw EmptyCorpusError("corpus has no sentences: " + path.string());
    return records;
}

std::vector<RawRecord> filter_by_length(std::span<const RawRecord> records, std::size_t max_words) {
    std::vector<RawRecord> kept;
    for (const auto& r : records) {
        if (word_count(tokenize(r.text)) <= max_words) kept.push_back(r);
    }
    return kept;
}

std::string render_for_display(std::string_view text) {
    std::string out;
    bool sentence_start = true;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto b = text.find_first_not_of(" \t\r\n", pos);
        if (b == std::string_view::npos) break;
        const auto e = std::min(text.find_first_of(" \t\r\n", b), text.size());
        pos = e;
        bool first_in_chunk = true;
        for (const auto& tok : tokenize(text.substr(b, e - b))) {
            const bool closing = is_punctuation(tok) && tok.find_first_of(".,!?;:)") != std::string::npos;
            // Emoji stay attached to whatever they were written against.
            const bool glued = !first_in_chunk && static_cast<unsigned char>(tok[0]) >= 0x80;
            first_in_chunk = false;
            if (!out.empty() && !closing && !glued) out.push_back(' ');
            std::string word = tok;
            if (word == "i") word = "I";
            if (sentence_start && !is_punctuation(word)) {
                word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
                sentence_start = false;
            }
            if (is_punctuation(tok) && tok.find_first_of(".!?") != std::string::npos) sentence_start = true;
            out += word;
        }
    }
    return out;
}

}  // namespace sarcgen
