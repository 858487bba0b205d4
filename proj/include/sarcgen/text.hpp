#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sarcgen {

enum class Polarity { positive, negative, unknown };

std::string_view to_string(Polarity p);
Polarity polarity_from_string(std::string_view s);

struct RawRecord {
    std::string text;
    Polarity polarity = Polarity::unknown;
    std::string source_id;
};

// A normalized, tokenized sentence. Tokens are lowercase and carry no
// hashtag or mention marks; text() joins them with single spaces.
struct Utterance {
    std::vector<std::string> tokens;
    std::string original;
    Polarity polarity = Polarity::unknown;

    std::string text() const;
    std::size_t size() const { return tokens.size(); }
    bool empty() const { return tokens.empty(); }
};

// Lexical normalization table: variant -> canonical. Canonical forms may be
// several words but must not themselves be variants, which keeps
// normalization idempotent.
class NormalizationTable {
public:
    NormalizationTable() = default;
    explicit NormalizationTable(std::map<std::string, std::string> entries);

    static NormalizationTable load_tsv(const std::filesystem::path& path);

    const std::string* lookup(std::string_view token) const;
    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::string, std::string, std::less<>> entries_;
};

// Token -> corrected token. Only applied when configured.
using SpellCorrector = std::function<std::string(const std::string&)>;

struct Normalizer {
    NormalizationTable table;
    SpellCorrector corrector;

    std::string operator()(std::string_view raw) const;
};

// Strips '#' from hashtags, drops @mentions, lowercases, tokenizes, applies
// the table then the corrector. Throws EmptyTextError when nothing is left.
std::string normalize_text(std::string_view raw, const Normalizer& normalizer);
std::string normalize_text(std::string_view raw);

// Whitespace + punctuation tokenization. A run of one repeated punctuation
// character is one token ("..." stays together); apostrophes and hyphens
// between word characters stay inside the word.
std::vector<std::string> tokenize(std::string_view text);

std::string join(std::span<const std::string> tokens, std::string_view sep = " ");

bool is_punctuation(std::string_view token);
// Lowercases ASCII letters; other bytes pass through.
std::string lower_ascii(std::string_view s);
std::size_t word_count(std::span<const std::string> tokens);

Utterance make_utterance(std::string_view raw, Polarity polarity, const Normalizer& normalizer);
Utterance make_utterance(std::string_view raw, Polarity polarity = Polarity::unknown);

// One sentence per line, blank lines skipped. source_id is "<file name>:<line>".
std::vector<RawRecord> load_sentiment_corpus(const std::filesystem::path& path, Polarity polarity);

// Keeps records with at most max_words non-punctuation tokens, in order.
std::vector<RawRecord> filter_by_length(std::span<const RawRecord> records, std::size_t max_words = 30);

// Upper-cases sentence-initial letters and the pronoun "i", and attaches
// punctuation to the preceding word. Used for display only.
std::string render_for_display(std::string_view text);

}  // namespace sarcgen
