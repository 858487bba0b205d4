#include "sarcgen/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "sarcgen/errors.hpp"
#include "sarcgen/text.hpp"

namespace sarcgen {

Lexicon::Lexicon(std::map<std::string, Entry, std::less<>> entries) {
    for (auto& [form, e] : entries) {
        const auto key = lower_ascii(form);
        e.lemma = lower_ascii(e.lemma);
        by_lemma_[e.lemma].push_back(key);
        entries_[key] = std::move(e);
    }
}

Lexicon Lexicon::load_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open " + path.string());
    std::map<std::string, Entry, std::less<>> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string form, lemma, pos;
        if (!std::getline(fields, form, '\t') || !std::getline(fields, lemma, '\t') || !std::getline(fields, pos, '\t') ||
            form.empty() || lemma.empty()) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected form<TAB>lemma<TAB>pos");
        }
        entries[form] = Entry{lemma, pos};
    }
    return Lexicon(std::move(entries));
}

const Lexicon::Entry* Lexicon::find(std::string_view form) const {
    const auto it = entries_.find(lower_ascii(form));
    return it == entries_.end() ? nullptr : &it->second;
}

std::string Lexicon::lemma(std::string_view form) const {
    const auto* e = find(form);
    return e != nullptr ? e->lemma : lower_ascii(form);
}

bool Lexicon::is_verb(std::string_view form) const {
    const auto* e = find(form);
    return e != nullptr && e->pos == "v";
}

std::vector<std::string> Lexicon::forms(std::string_view form) const {
    const auto key = lower_ascii(form);
    const auto lem = lemma(key);
    std::vector<std::string> out{key, lem};
    if (const auto it = by_lemma_.find(lem); it != by_lemma_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace sarcgen
