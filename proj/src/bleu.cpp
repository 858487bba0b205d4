#include "sarcgen/bleu.hpp"

#include <cmath>
#include <string_view>
#include <unordered_map>

#include "sarcgen/errors.hpp"

namespace sarcgen {
namespace {

constexpr std::size_t kMaxOrder = 4;

// n-grams keyed by their tokens joined with a unit separator.
std::unordered_map<std::string, std::size_t> count_ngrams(const TokenList& tokens, std::size_t order) {
    std::unordered_map<std::string, std::size_t> counts;
    if (tokens.size() < order) return counts;
    for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
        std::string key;
        for (std::size_t k = 0; k < order; ++k) {
            if (k != 0) key.push_back('\x1f');
            key += tokens[i + k];
        }
        ++counts[key];
    }
    return counts;
}

}  // namespace

double corpus_bleu(std::span<const TokenList> hypotheses, std::span<const TokenList> references) {
    if (hypotheses.size() != references.size()) throw ShapeError("hypothesis and reference counts differ");
    if (references.empty()) throw ShapeError("corpus_bleu needs at least one reference");

    std::size_t matches[kMaxOrder] = {};
    std::size_t totals[kMaxOrder] = {};
    std::size_t hyp_len = 0;
    std::size_t ref_len = 0;
    for (std::size_t s = 0; s < hypotheses.size(); ++s) {
        hyp_len += hypotheses[s].size();
        ref_len += references[s].size();
        for (std::size_t n = 1; n <= kMaxOrder; ++n) {
            const auto hyp = count_ngrams(hypotheses[s], n);
            const auto ref = count_ngrams(references[s], n);
            for (const auto& [gram, c] : hyp) {
                totals[n - 1] += c;
                if (auto it = ref.find(gram); it != ref.end()) matches[n - 1] += std::min(c, it->second);
            }
        }
    }
    if (hyp_len == 0) return 0.0;

    double log_sum = 0.0;
    std::size_t orders = 0;
    for (std::size_t n = 0; n < kMaxOrder; ++n) {
        if (totals[n] == 0) continue;
        const double m = matches[n] == 0 ? kBleuEpsilon : static_cast<double>(matches[n]);
        log_sum += std::log(m / static_cast<double>(totals[n]));
        ++orders;
    }
    const double precision = std::exp(log_sum / static_cast<double>(orders));
    const double bp = hyp_len > ref_len
                          ? 1.0
                          : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
    return bp * precision;
}

}  // namespace sarcgen
