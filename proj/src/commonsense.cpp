#include "sarcgen/commonsense.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <mutex>
#include <set>

#include "sarcgen/errors.hpp"

namespace sarcgen {
namespace {

// Pronoun families by case: nominative, possessive, objective, reflexive.
enum Case { kNominative, kPossessive, kObjective, kReflexive };

struct Family {
    std::array<std::string_view, 4> forms;
};

constexpr std::array<Family, 7> kFamilies = {{
    {{"i", "my", "me", "myself"}},
    {{"you", "your", "you", "yourself"}},
    {{"he", "his", "him", "himself"}},
    {{"she", "her", "her", "herself"}},
    {{"we", "our", "us", "ourselves"}},
    {{"they", "their", "them", "themselves"}},
    {{"it", "its", "it", "itself"}},
}};

constexpr std::string_view kAuxiliaries[] = {
    "am",   "is",    "are",    "was",   "were",  "be",  "been", "being", "has",  "have",  "had",
    "do",   "does",  "did",    "will",  "would", "can", "could", "shall", "should", "may", "might", "must",
    "isn't", "aren't", "wasn't", "weren't", "hasn't", "haven't", "hadn't", "doesn't", "don't", "didn't",
    "won't", "wouldn't", "can't", "couldn't", "shouldn't"};

constexpr std::string_view kPrepositions[] = {
    "by",     "of",     "in",      "on",      "at",     "to",     "from",   "with",   "for",   "about",
    "after",  "before", "into",    "onto",    "over",   "under",  "up",     "down",   "out",   "off",
    "through", "during", "as",     "than",    "like",   "without", "within", "around", "among", "across",
    "behind", "below",  "above",   "near",    "since",  "until",  "upon",   "toward", "towards", "against"};

constexpr std::string_view kOtherStop[] = {"a", "an", "the", "and", "or", "but", "so",
                                           "not", "nor", "yet", "if", "that", "then"};

template <std::size_t N>
bool contains(const std::string_view (&list)[N], std::string_view w) {
    return std::find(std::begin(list), std::end(list), w) != std::end(list);
}

struct PronounInfo {
    std::size_t family = 0;
    Case grammatical_case = kNominative;
};

// Family and a case guess for a lowercase token.
std::optional<PronounInfo> pronoun_info(std::string_view w) {
    for (std::size_t f = 0; f < kFamilies.size(); ++f) {
        for (int c = 0; c < 4; ++c) {
            if (kFamilies[f].forms[static_cast<std::size_t>(c)] == w) return PronounInfo{f, static_cast<Case>(c)};
        }
    }
    return std::nullopt;
}

std::vector<std::string> lowered(std::span<const std::string> tokens) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(lower_ascii(t));
    return out;
}

bool looks_like_verb(std::string_view w, const Lexicon& lexicon) {
    if (is_auxiliary(w) || lexicon.is_verb(w)) return true;
    if (lexicon.find(w) != nullptr) return false;
    auto ends_with = [&](std::string_view suffix) {
        return w.size() > suffix.size() + 2 && w.substr(w.size() - suffix.size()) == suffix;
    };
    return ends_with("ing") || ends_with("ed");
}

bool is_conjunction(std::string_view w) { return w == "and" || w == "or" || w == "but" || w == "so" || w == "because" || w == "when"; }

std::string capitalize(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

bool is_capitalized(std::string_view s) { return !s.empty() && std::isupper(static_cast<unsigned char>(s[0])) != 0; }

enum class Agreement { first_singular, third_singular, plural };

Agreement agreement_of(std::string_view subject) {
    auto words = tokenize(lower_ascii(subject));
    if (words.empty()) return Agreement::first_singular;
    const std::string& head = words.back();
    if (head == "i") return Agreement::first_singular;
    if (head == "you" || head == "we" || head == "they") return Agreement::plural;
    if (pronoun_info(head)) return Agreement::third_singular;
    const bool plural_noun = head.size() > 3 && head.back() == 's' && !head.ends_with("ss") && !head.ends_with("us") &&
                             !head.ends_with("is");
    return plural_noun ? Agreement::plural : Agreement::third_singular;
}

// Re-inflects an auxiliary; returns an empty view for non-auxiliaries.
std::string_view agreeing_auxiliary(std::string_view aux, Agreement a) {
    const std::size_t col = a == Agreement::first_singular ? 0 : a == Agreement::third_singular ? 1 : 2;
    static constexpr std::array<std::array<std::string_view, 3>, 8> table = {{
        {{"am", "is", "are"}},
        {{"was", "was", "were"}},
        {{"have", "has", "have"}},
        {{"do", "does", "do"}},
        {{"am not", "isn't", "aren't"}},
        {{"wasn't", "wasn't", "weren't"}},
        {{"haven't", "hasn't", "haven't"}},
        {{"don't", "doesn't", "don't"}},
    }};
    std::size_t row = table.size();
    for (std::size_t r = 0; r < table.size() && row == table.size(); ++r) {
        for (const auto form : table[r]) {
            if (form == aux) row = r;
        }
    }
    return row == table.size() ? std::string_view{} : table[row][col];
}

std::string with_case_of(std::string_view replacement, std::string_view original) {
    std::string out{replacement};
    if (out == "i") return "I";
    return is_capitalized(original) ? capitalize(out) : out;
}

}  // namespace

std::string_view to_string(Provenance p) { return p == Provenance::retrieved ? "retrieved" : "generated"; }

Provenance provenance_from_string(std::string_view s) {
    if (s == "retrieved") return Provenance::retrieved;
    if (s == "generated") return Provenance::generated;
    throw ValidationError("unknown provenance '" + std::string{s} + "'");
}

bool is_auxiliary(std::string_view w) { return contains(kAuxiliaries, w); }

bool is_pronoun(std::string_view w) { return pronoun_info(w).has_value(); }

bool is_stop_word(std::string_view w) {
    return is_auxiliary(w) || is_pronoun(w) || contains(kPrepositions, w) || contains(kOtherStop, w);
}

InferredPhrase infer_effect_phrase(const CommonsenseBackend& backend, const std::string& sentence) {
    if (sentence.find_first_not_of(" \t\r\n") == std::string::npos) throw PreconditionError("cannot infer from an empty sentence");
    const auto phrases = backend.xeffect(sentence);
    if (phrases.empty()) throw NoInferenceError("no xEffect phrase for '" + sentence + "'");
    const auto& top = phrases.front();
    const auto b = top.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) throw NoInferenceError("empty xEffect phrase for '" + sentence + "'");
    const auto e = top.find_last_not_of(" \t\r\n");
    return InferredPhrase{top.substr(b, e - b + 1), "xEffect", sentence};
}

std::string extract_keyword(const InferredPhrase& phrase, const Lexicon& lexicon) {
    const auto tokens = lowered(tokenize(phrase.text));
    std::optional<std::size_t> first_content;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& w = tokens[i];
        if (is_punctuation(w) || is_stop_word(w)) continue;
        if (!first_content) first_content = i;
        if (!looks_like_verb(w, lexicon)) continue;
        if (i > 0 && is_auxiliary(tokens[i - 1])) return w;
        return lexicon.lemma(w);
    }
    if (!first_content) throw NoKeywordError("no content word in '" + phrase.text + "'");
    return tokens[*first_content];
}

// ---------------------------------------------------------------------------
// Retrieval
// ---------------------------------------------------------------------------

RetrievalCache::RetrievalCache(std::shared_ptr<const RetrievalBackend> backend, const Lexicon& lexicon)
    : backend_(std::move(backend)), lexicon_(lexicon) {
    if (!backend_) throw PreconditionError("retrieval cache needs a backend");
}

std::vector<std::string> RetrievalCache::get(const std::string& keyword) {
    if (keyword.empty()) throw PreconditionError("retrieval needs a non-empty keyword");
    {
        std::shared_lock lock(mutex_);
        if (const auto it = cache_.find(keyword); it != cache_.end()) return it->second;
    }
    const auto forms = lexicon_.forms(keyword);
    const std::set<std::string, std::less<>> form_set(forms.begin(), forms.end());
    std::vector<std::string> found;
    std::set<std::string, std::less<>> seen;
    std::size_t calls = 0;
    // The keyword itself first, so its own hits lead the list.
    std::vector<std::string> queries{keyword};
    for (const auto& f : forms) {
        if (f != keyword) queries.push_back(f);
    }
    for (const auto& q : queries) {
        ++calls;
        for (auto& s : backend_->retrieve(q)) {
            if (seen.count(s) != 0) continue;
            const auto tokens = lowered(tokenize(s));
            const bool hit = std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) { return form_set.count(t) != 0; });
            if (!hit) continue;
            seen.insert(s);
            found.push_back(std::move(s));
        }
    }
    std::unique_lock lock(mutex_);
    calls_ += calls;
    return cache_.emplace(keyword, std::move(found)).first->second;
}

std::size_t RetrievalCache::backend_calls() const {
    std::shared_lock lock(mutex_);
    return calls_;
}

std::vector<std::string> retrieve_candidates(RetrievalCache& cache, const std::string& keyword) { return cache.get(keyword); }

std::vector<std::string> filter_candidates(std::span<const std::string> candidates, const std::string& keyword,
                                           std::size_t input_tokens, const Lexicon& lexicon) {
    if (input_tokens == 0) throw PreconditionError("input_tokens must be at least 1");
    const auto forms = lexicon.forms(keyword);
    auto is_form = [&](const std::string& t) { return std::binary_search(forms.begin(), forms.end(), t); };
    std::vector<std::string> kept;
    for (const auto& c : candidates) {
        const auto tokens = lowered(tokenize(c));
        if (tokens.empty() || tokens.size() >= 2 * input_tokens) continue;
        std::vector<std::string> words;
        for (const auto& t : tokens) {
            if (!is_punctuation(t)) words.push_back(t);
        }
        bool near_edge = false;
        for (std::size_t i = 0; i < words.size() && !near_edge; ++i) {
            if (i < kKeywordWindow || i + kKeywordWindow >= words.size()) near_edge = is_form(words[i]);
        }
        if (near_edge) kept.push_back(c);
    }
    return kept;
}

// ---------------------------------------------------------------------------
// Pronouns, subject, agreement
// ---------------------------------------------------------------------------

std::string harmonize_pronouns(const std::string& candidate, const Utterance& input) {
    std::size_t target = 0;
    for (const auto& t : input.tokens) {
        if (const auto info = pronoun_info(lower_ascii(t))) {
            target = info->family;
            break;
        }
    }
    auto tokens = tokenize(candidate);
    const auto lower = lowered(tokens);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        auto info = pronoun_info(lower[i]);
        if (!info) continue;
        const bool next_is_word = i + 1 < tokens.size() && !is_punctuation(lower[i + 1]);
        const bool next_is_verb = next_is_word && (is_auxiliary(lower[i + 1]) || lower[i + 1].ends_with("ed"));
        const bool clause_start = i == 0 || is_punctuation(lower[i - 1]) || is_conjunction(lower[i - 1]);
        // Resolve the forms shared between cases from context.
        if (lower[i] == "her") {
            info->grammatical_case = next_is_word && !is_stop_word(lower[i + 1]) ? kPossessive : kObjective;
        } else if (lower[i] == "you" || lower[i] == "it") {
            info->grammatical_case = clause_start || next_is_verb ? kNominative : kObjective;
        }
        const auto replacement = kFamilies[target].forms[info->grammatical_case];
        if (replacement != lower[i] || (replacement == "i" && tokens[i] != "I")) {
            tokens[i] = with_case_of(replacement, tokens[i]);
        }
        // The written form decides agreement, so a second pass sees the same case.
        bool nominative = info->grammatical_case == kNominative;
        if (replacement == "you" || replacement == "it") nominative = clause_start || next_is_verb;
        if (nominative && i + 1 < tokens.size()) {
            const auto agreed = agreeing_auxiliary(lower[i + 1], agreement_of(replacement));
            if (!agreed.empty() && agreed != lower[i + 1]) tokens[i + 1] = with_case_of(agreed, tokens[i + 1]);
        }
    }
    return join(tokens);
}

std::string extract_subject(const std::string& sentence, const Lexicon& lexicon) {
    const auto tokens = lowered(tokenize(sentence));
    std::size_t verb = tokens.size();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!is_punctuation(tokens[i]) && !is_pronoun(tokens[i]) && looks_like_verb(tokens[i], lexicon)) {
            verb = i;
            break;
        }
    }
    if (verb == tokens.size()) return "I";
    for (std::size_t i = 0; i < verb; ++i) {
        if (is_pronoun(tokens[i])) return tokens[i] == "i" ? "I" : capitalize(tokens[i]);
    }
    std::optional<std::size_t> head;
    for (std::size_t i = 0; i < verb; ++i) {
        const bool content = !is_punctuation(tokens[i]) && !is_stop_word(tokens[i]);
        if (content) head = i;
        else if (head) break;
    }
    return head ? tokens[*head] : "I";
}

std::string agree_auxiliary(const std::string& subject, const InferredPhrase& phrase) {
    auto tokens = tokenize(phrase.text);
    if (tokens.empty()) throw PreconditionError("cannot agree an empty phrase");
    const auto first = lower_ascii(tokens[0]);
    const auto agreed = agreeing_auxiliary(first, agreement_of(subject));
    if (agreed.empty() || agreed == first) return phrase.text;
    tokens[0] = with_case_of(agreed, tokens[0]);
    return join(tokens);
}

// ---------------------------------------------------------------------------
// Generation and selection
// ---------------------------------------------------------------------------

std::string generate_context(const GenerationBackend& backend, const std::string& subject, const std::string& phrase) {
    if (subject.empty() || phrase.empty()) throw PreconditionError("generation needs a subject and a phrase");
    const auto sentence = backend.generate({subject, phrase});
    const auto b = sentence.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) throw BackendError("generation backend returned an empty sentence");
    const auto e = sentence.find_last_not_of(" \t\r\n");
    return sentence.substr(b, e - b + 1);
}

double score_incongruity(const NliBackend& backend, const std::string& reversed_sentence, const std::string& candidate,
                         NliDirection direction) {
    if (reversed_sentence.empty() || candidate.empty()) throw PreconditionError("incongruity needs two non-empty sentences");
    const auto s = direction == NliDirection::reversed_as_premise ? backend.nli(reversed_sentence, candidate)
                                                                  : backend.nli(candidate, reversed_sentence);
    if (!std::isfinite(s.contradiction) || s.contradiction < 0.0 || s.contradiction > 1.0) {
        throw BackendError("contradiction probability outside [0,1]");
    }
    return s.contradiction;
}

std::size_t select_context(std::span<const ContextCandidate> candidates) {
    if (candidates.empty()) throw NoContextError("no context candidates to select from");
    std::size_t best = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!candidates[i].incongruity) throw PreconditionError("candidate " + std::to_string(i) + " is unscored");
        if (*candidates[i].incongruity > *candidates[best].incongruity) best = i;
    }
    return best;
}

std::size_t select_context(const NliBackend& backend, const std::string& reversed_sentence,
                           std::vector<ContextCandidate>& candidates, NliDirection direction) {
    if (candidates.empty()) throw NoContextError("no context candidates to select from");
    for (auto& c : candidates) c.incongruity = score_incongruity(backend, reversed_sentence, c.sentence, direction);
    return select_context(candidates);
}

}  // namespace sarcgen
