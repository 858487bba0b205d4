#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sarcgen/backends.hpp"
#include "sarcgen/lexicon.hpp"
#include "sarcgen/text.hpp"

namespace sarcgen {

struct InferredPhrase {
    std::string text;
    std::string relation = "xEffect";
    std::string source_sentence;
};

enum class Provenance { retrieved, generated };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

struct ContextCandidate {
    std::string sentence;
    Provenance provenance = Provenance::retrieved;
    std::string keyword;
    std::optional<double> incongruity;
};

// Top xEffect phrase. Throws PreconditionError on an empty sentence,
// NoInferenceError when the backend has no non-empty phrase.
InferredPhrase infer_effect_phrase(const CommonsenseBackend& backend, const std::string& sentence);

// Word classes used by the keyword, subject and agreement rules.
bool is_auxiliary(std::string_view word);
bool is_stop_word(std::string_view word);
bool is_pronoun(std::string_view word);

// First content word after dropping auxiliaries, prepositions, pronouns,
// articles and conjunctions. The first verb wins: its surface form when it
// directly follows an auxiliary ("is criticized" -> "criticized"), its
// lemma otherwise ("feels happy" -> "feel"). Without a verb the first
// remaining word is returned. Throws NoKeywordError when nothing remains.
std::string extract_keyword(const InferredPhrase& phrase, const Lexicon& lexicon);

// Caches retrieval results per keyword. Lookups of a cached keyword take a
// shared lock and never reach the backend.
class RetrievalCache {
public:
    RetrievalCache(std::shared_ptr<const RetrievalBackend> backend, const Lexicon& lexicon);

    // Sentences from the backend containing the keyword or one of its
    // inflections, queried once per distinct form, deduplicated in order.
    std::vector<std::string> get(const std::string& keyword);
    std::size_t backend_calls() const;

private:
    std::shared_ptr<const RetrievalBackend> backend_;
    const Lexicon& lexicon_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::vector<std::string>, std::less<>> cache_;
    std::size_t calls_ = 0;
};

std::vector<std::string> retrieve_candidates(RetrievalCache& cache, const std::string& keyword);

inline constexpr std::size_t kKeywordWindow = 3;

// Keeps candidates with the keyword (or an inflection) among their first or
// last three non-punctuation tokens and with fewer than 2 * input_tokens
// tokens. Order is preserved. Throws PreconditionError if input_tokens == 0.
std::vector<std::string> filter_candidates(std::span<const std::string> candidates, const std::string& keyword,
                                           std::size_t input_tokens, const Lexicon& lexicon);

// Rewrites every pronoun of the candidate to the matching case of the
// input's first pronoun ("I" when the input has none), then re-agrees an
// auxiliary that directly follows a rewritten subject pronoun. Output
// tokens are joined with single spaces.
std::string harmonize_pronouns(const std::string& candidate, const Utterance& input);

// First pronoun (capitalized) or head of the first noun group before the
// first verb; "I" when there is neither.
std::string extract_subject(const std::string& sentence, const Lexicon& lexicon);

// Rewrites a leading am/is/are/was/were/has/have/does/do to agree with the
// subject. Phrases that do not start with one of these are returned as is.
std::string agree_auxiliary(const std::string& subject, const InferredPhrase& phrase);

// Throws PreconditionError on empty inputs and BackendError on an empty
// generation.
std::string generate_context(const GenerationBackend& backend, const std::string& subject, const std::string& phrase);

enum class NliDirection { reversed_as_premise, candidate_as_premise };

// Contradiction probability between the reversed sentence and a candidate.
double score_incongruity(const NliBackend& backend, const std::string& reversed_sentence, const std::string& candidate,
                         NliDirection direction = NliDirection::reversed_as_premise);

// Argmax over already scored candidates, lowest index on ties. Throws
// NoContextError on an empty list and PreconditionError if any candidate
// is unscored.
std::size_t select_context(std::span<const ContextCandidate> candidates);

// Scores every candidate in place, then selects.
std::size_t select_context(const NliBackend& backend, const std::string& reversed_sentence,
                           std::vector<ContextCandidate>& candidates,
                           NliDirection direction = NliDirection::reversed_as_premise);

}  // namespace sarcgen
