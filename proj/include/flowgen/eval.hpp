#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace flowgen {

/// Lowercase, collapse whitespace runs to one space, trim.
std::string normalize(std::string_view s);

/// Whitespace split of normalize(s).
std::vector<std::string> metric_tokens(std::string_view s);

inline constexpr double kBleuEpsilon = 0.1;

/// Corpus BLEU-4: clipped n-gram precisions pooled over the corpus,
/// geometric mean, brevity penalty. No unigram match scores 0. A higher
/// order with candidate n-grams but no match gets epsilon / count; an order
/// with no candidate n-grams at all is left out of the mean.
double bleu4(const std::vector<std::string>& candidates, const std::vector<std::string>& references,
             double epsilon = kBleuEpsilon);

/// LCS-based F1 over metric tokens. Two empty strings score 1.
double rouge_l(std::string_view candidate, std::string_view reference);

struct RankedExample {
  std::string id;
  std::string gold;
  std::vector<std::string> candidates;  // best first
};

/// Fraction of examples with a normalized exact match in the top k.
double recall_at_k(const std::vector<RankedExample>& examples, std::size_t k);

/// Corpus metrics plus one row per example; BLEU and ROUGE-L use the top
/// candidate. Keys come out in a fixed order.
nlohmann::ordered_json evaluate(const std::vector<RankedExample>& examples,
                                const std::vector<std::size_t>& ks = {1, 5});

}  // namespace flowgen
