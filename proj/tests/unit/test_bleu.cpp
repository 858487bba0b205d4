#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "sarcgen/bleu.hpp"
#include "sarcgen/errors.hpp"
#include "sarcgen/nn/params.hpp"
#include "sarcgen/text.hpp"
#include "support/oracles.hpp"

using namespace sarcgen;

namespace {

TokenList toks(const char* s) { return tokenize(s); }

}  // namespace

TEST_CASE("identical corpora score exactly one") {
    const std::vector<TokenList> x = {toks("the cat sat on the mat"), toks("a very good day today"), toks("hi")};
    CHECK(corpus_bleu(x, x) == 1.0);
}

TEST_CASE("no unigram overlap scores near zero") {
    const std::vector<TokenList> h = {toks("alpha beta gamma delta")};
    const std::vector<TokenList> r = {toks("one two three four")};
    CHECK(corpus_bleu(h, r) <= 1e-6);
}

TEST_CASE("shape errors") {
    const std::vector<TokenList> one = {toks("a b")};
    const std::vector<TokenList> two = {toks("a b"), toks("c")};
    CHECK_THROWS_AS(corpus_bleu(one, two), ShapeError);
    CHECK_THROWS_AS(corpus_bleu(std::vector<TokenList>{}, std::vector<TokenList>{}), ShapeError);
}

TEST_CASE("three-pair fixture matches the brute-force oracle") {
    const std::vector<TokenList> h = {toks("the cat is on the mat"), toks("i had a very good day at school"),
                                      toks("we saw the game")};
    const std::vector<TokenList> r = {toks("the cat sat on the mat"), toks("i had a very good day today"),
                                      toks("we saw the very good game last night")};
    CHECK(std::fabs(corpus_bleu(h, r) - testing::bleu_oracle(h, r)) <= 1e-6);
}

TEST_CASE("brevity penalty applies to short hypotheses") {
    const std::vector<TokenList> h = {toks("a b c d")};
    const std::vector<TokenList> r = {toks("a b c d e f g h")};
    CHECK(corpus_bleu(h, r) == doctest::Approx(std::exp(1.0 - 8.0 / 4.0)));
}

TEST_CASE("orders without hypothesis n-grams are left out") {
    const std::vector<TokenList> h = {toks("a b")};
    const std::vector<TokenList> r = {toks("a b")};
    CHECK(corpus_bleu(h, r) == 1.0);
}

TEST_CASE("random corpora match the oracle, stay in range and ignore joint permutation") {
    nn::Rng rng(77);
    const std::string vocab[] = {"a", "b", "c", "d", "e", "f"};
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<TokenList> h, r;
        for (std::size_t k = 0, n = 1 + rng.below(5); k < n; ++k) {
            TokenList x, y;
            for (std::size_t i = 0, m = 1 + rng.below(9); i < m; ++i) x.push_back(vocab[rng.below(6)]);
            for (std::size_t i = 0, m = 1 + rng.below(9); i < m; ++i) y.push_back(vocab[rng.below(6)]);
            h.push_back(x);
            r.push_back(y);
        }
        const double score = corpus_bleu(h, r);
        CHECK(std::fabs(score - testing::bleu_oracle(h, r)) <= 1e-9);
        CHECK(score >= 0.0);
        CHECK(score <= 1.0);
        std::reverse(h.begin(), h.end());
        std::reverse(r.begin(), r.end());
        CHECK(corpus_bleu(h, r) == doctest::Approx(score).epsilon(1e-12));
    }
}
