#include <doctest.h>

#include <atomic>
#include <thread>

#include "sarcgen/commonsense.hpp"
#include "sarcgen/errors.hpp"
#include "sarcgen/nn/params.hpp"
#include "support/fixtures.hpp"

using namespace sarcgen;

namespace {

const Lexicon& lex() { return testing::shipped_lexicon(); }

std::string keyword_of(const char* phrase) { return extract_keyword(InferredPhrase{phrase, "xEffect", ""}, lex()); }

std::string agree(const char* subject, const char* phrase) { return agree_auxiliary(subject, InferredPhrase{phrase, "xEffect", ""}); }

class CountingRetrieval final : public RetrievalBackend {
public:
    std::vector<std::string> retrieve(const std::string& keyword) const override {
        ++calls;
        if (keyword == "feel") return {"i feel fine", "we feel ok"};
        if (keyword == "felt") return {"she felt odd", "i feel fine"};
        return {};
    }
    mutable std::atomic<int> calls{0};
};

class FixedNli final : public NliBackend {
public:
    NliScores nli(const std::string&, const std::string&) const override { return {0.1, 0.2, 0.7}; }
};

std::vector<std::string> filter(std::vector<std::string> c, const char* keyword, std::size_t input_tokens) {
    return filter_candidates(c, keyword, input_tokens, lex());
}

std::string sentence_of(std::size_t n, const std::string& first) {
    std::string s = first;
    for (std::size_t i = 1; i < n; ++i) s += " w" + std::to_string(i);
    return s;
}

}  // namespace

TEST_CASE("keyword extraction examples") {
    CHECK(keyword_of("is criticized by his boss") == "criticized");
    CHECK(keyword_of("feels happy") == "feel");
    CHECK(keyword_of("gets wet") == "get");
    CHECK_THROWS_AS(keyword_of("is by the"), NoKeywordError);
}

TEST_CASE("keyword rules skip function words") {
    for (const char* w : {"is", "was", "have", "do", "can't"}) CHECK(is_auxiliary(w));
    for (const char* w : {"by", "the", "and", "he", "they"}) CHECK(is_stop_word(w));
    CHECK(is_pronoun("her"));
    CHECK_FALSE(is_pronoun("boss"));
}

TEST_CASE("subject extraction examples") {
    CHECK(extract_subject("raining all day", lex()) == "I");
    CHECK(extract_subject("mom is in a bad mood today", lex()) == "mom");
    CHECK(extract_subject("his presentation was bad", lex()) == "His");
    CHECK(extract_subject("she missed the bus", lex()) == "She");
    CHECK(extract_subject("that movie was terrible .", lex()) == "movie");
}

TEST_CASE("auxiliary agreement examples") {
    CHECK(agree("they", "is stuck in traffic") == "are stuck in traffic");
    CHECK(agree("I", "has lost the game") == "have lost the game");
    CHECK(agree("I", "is tired") == "am tired");
    CHECK(agree("we", "was late") == "were late");
    CHECK(agree("mom", "are happy") == "is happy");
    CHECK(agree("she", "does not care") == "does not care");
    CHECK(agree("they", "gets wet") == "gets wet");
}

TEST_CASE("pronoun harmonization examples") {
    const auto she = make_utterance("she missed the bus");
    CHECK(harmonize_pronouns("he openly criticized the plan", she) == "she openly criticized the plan");
    const auto none = make_utterance("raining all day");
    CHECK(harmonize_pronouns("they were bored", none) == "I was bored");
    CHECK(harmonize_pronouns("my boss criticized my appearance", make_utterance("his car broke")) ==
          "his boss criticized his appearance");
}

TEST_CASE("pronoun harmonization is idempotent") {
    nn::Rng rng(31);
    const std::string pool[] = {"he", "she", "they", "we", "i", "my", "his", "her", "them", "is", "are",
                                "was", "happy", "saw", "the", "dog", "."};
    const char* inputs[] = {"she missed the bus", "we lost", "raining all day", "they hate mondays", "his car broke"};
    for (int trial = 0; trial < 300; ++trial) {
        std::string candidate;
        for (std::size_t i = 0, n = 1 + rng.below(8); i < n; ++i) candidate += (i ? " " : "") + pool[rng.below(std::size(pool))];
        const auto input = make_utterance(inputs[rng.below(std::size(inputs))]);
        const auto once = harmonize_pronouns(candidate, input);
        CAPTURE(candidate);
        CHECK(harmonize_pronouns(once, input) == once);
    }
}

TEST_CASE("filter keeps keyword at either end and under the length bound") {
    const auto kept = filter({sentence_of(15, "criticized"), sentence_of(16, "criticized")}, "criticized", 8);
    CHECK(kept == std::vector<std::string>{sentence_of(15, "criticized")});

    CHECK(filter({"a b c d e f criticizes"}, "criticized", 8).size() == 1);
    CHECK(filter({"a b c criticized d e f"}, "criticized", 8).empty());
    CHECK(filter({"a b criticized c d"}, "criticized", 8).size() == 1);
    CHECK(filter({"a b c d e f criticized ."}, "criticized", 8).size() == 1);
    CHECK_THROWS_AS(filter({"x"}, "criticized", 0), PreconditionError);
}

TEST_CASE("filter matches random candidates against a direct check") {
    nn::Rng rng(5);
    const std::string pool[] = {"feel", "felt", "feels", "dog", "cat", "ran", "."};
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<std::string> candidates;
        for (int c = 0; c < 5; ++c) {
            std::string s;
            for (std::size_t i = 0, n = 1 + rng.below(14); i < n; ++i) s += (i ? " " : "") + pool[rng.below(std::size(pool))];
            candidates.push_back(s);
        }
        const std::size_t input_tokens = 1 + rng.below(8);
        std::vector<std::string> expected;
        for (const auto& s : candidates) {
            const auto tokens = tokenize(s);
            std::vector<std::string> words;
            for (const auto& t : tokens) {
                if (t != ".") words.push_back(t);
            }
            bool hit = false;
            for (std::size_t i = 0; i < words.size(); ++i) {
                const bool edge = i < kKeywordWindow || i + kKeywordWindow >= words.size();
                hit = hit || (edge && (words[i] == "feel" || words[i] == "felt" || words[i] == "feels"));
            }
            if (hit && tokens.size() < 2 * input_tokens) expected.push_back(s);
        }
        CHECK(filter(candidates, "feel", input_tokens) == expected);
    }
}

TEST_CASE("retrieval cache queries each form once and deduplicates") {
    auto backend = std::make_shared<CountingRetrieval>();
    RetrievalCache cache(backend, lex());
    const auto first = cache.get("feel");
    const int calls = backend->calls;
    CHECK(calls >= 2);
    CHECK(std::count(first.begin(), first.end(), "i feel fine") == 1);
    CHECK(std::find(first.begin(), first.end(), "she felt odd") != first.end());

    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) threads.emplace_back([&] { for (int i = 0; i < 50; ++i) cache.get("feel"); });
    for (auto& t : threads) t.join();
    CHECK(backend->calls == calls);
    CHECK(cache.backend_calls() == static_cast<std::size_t>(calls));
}

TEST_CASE("selection takes the lowest index on ties and rejects bad input") {
    std::vector<ContextCandidate> c(3);
    c[0].incongruity = 0.3;
    c[1].incongruity = 0.9;
    c[2].incongruity = 0.9;
    CHECK(select_context(c) == 1);
    CHECK_THROWS_AS(select_context(std::span<const ContextCandidate>{}), NoContextError);
    c[2].incongruity.reset();
    CHECK_THROWS_AS(select_context(c), PreconditionError);
}

TEST_CASE("incongruity is the contradiction probability") {
    FixedNli nli;
    CHECK(score_incongruity(nli, "i love rain", "i hate rain") == doctest::Approx(0.7));
    CHECK_THROWS_AS(score_incongruity(nli, "i love rain", ""), PreconditionError);
}

TEST_CASE("selection agrees with a brute-force argmax") {
    nn::Rng rng(42);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<ContextCandidate> c(1 + rng.below(6));
        for (auto& x : c) x.incongruity = static_cast<double>(rng.below(5)) / 4.0;
        std::size_t best = 0;
        for (std::size_t i = 1; i < c.size(); ++i) {
            if (*c[i].incongruity > *c[best].incongruity) best = i;
        }
        CHECK(select_context(c) == best);
    }
}
