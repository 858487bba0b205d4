#pragma once

#include <span>
#include <string>
#include <vector>

namespace sarcgen {

using TokenList = std::vector<std::string>;

inline constexpr double kBleuEpsilon = 1e-9;

// Corpus-level BLEU with one reference per hypothesis: clipped 1..4-gram
// precisions pooled over the corpus, uniform weights, brevity penalty.
// A zero match count is replaced by epsilon. Orders for which the corpus has
// no hypothesis n-grams at all are left out of the geometric mean.
// Throws ShapeError on length mismatch or an empty corpus.
double corpus_bleu(std::span<const TokenList> hypotheses, std::span<const TokenList> references);

}  // namespace sarcgen
