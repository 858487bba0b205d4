#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sarcgen {

// Inflection table: surface form -> (lemma, part of speech). Loaded from a
// TSV with columns form, lemma, pos ("v", "n", "adj", ...); '#' starts a
// comment line. Lookups are case-insensitive.
class Lexicon {
public:
    struct Entry {
        std::string lemma;
        std::string pos;
    };

    Lexicon() = default;
    explicit Lexicon(std::map<std::string, Entry, std::less<>> entries);

    static Lexicon load_tsv(const std::filesystem::path& path);

    const Entry* find(std::string_view form) const;
    // The lemma, or the lowercased form itself when unlisted.
    std::string lemma(std::string_view form) const;
    bool is_verb(std::string_view form) const;
    // Every listed form sharing the lemma of `form`, plus `form` and the
    // lemma; sorted and lowercased.
    std::vector<std::string> forms(std::string_view form) const;
    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::string, Entry, std::less<>> entries_;
    std::map<std::string, std::vector<std::string>, std::less<>> by_lemma_;
};

}  // namespace sarcgen
