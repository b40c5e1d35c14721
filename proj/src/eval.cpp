#include "flowgen/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "flowgen/errors.hpp"

namespace flowgen {
namespace {

using Ngrams = std::map<std::vector<std::string>, std::size_t>;

Ngrams ngrams(const std::vector<std::string>& toks, std::size_t n) {
  Ngrams out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i)
    ++out[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                   toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return out;
}

bool hit(const RankedExample& ex, std::size_t k) {
  const std::string gold = normalize(ex.gold);
  for (std::size_t i = 0; i < ex.candidates.size() && i < k; ++i)
    if (normalize(ex.candidates[i]) == gold) return true;
  return false;
}

}  // namespace

std::string normalize(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<std::string> metric_tokens(std::string_view s) {
  std::vector<std::string> out;
  const std::string n = normalize(s);
  std::size_t start = 0;
  while (start < n.size()) {
    auto sp = n.find(' ', start);
    if (sp == std::string::npos) sp = n.size();
    out.push_back(n.substr(start, sp - start));
    start = sp + 1;
  }
  return out;
}

double bleu4(const std::vector<std::string>& candidates, const std::vector<std::string>& references,
             double epsilon) {
  if (candidates.size() != references.size())
    throw AlignmentError("BLEU needs as many candidates as references");
  if (candidates.empty()) throw Error("BLEU of an empty corpus");
  std::size_t matched[4] = {0, 0, 0, 0}, total[4] = {0, 0, 0, 0};
  std::size_t cand_len = 0, ref_len = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto c = metric_tokens(candidates[i]);
    const auto r = metric_tokens(references[i]);
    cand_len += c.size();
    ref_len += r.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      const Ngrams cn = ngrams(c, n), rn = ngrams(r, n);
      for (const auto& [g, count] : cn) {
        total[n - 1] += count;
        auto it = rn.find(g);
        if (it != rn.end()) matched[n - 1] += std::min(count, it->second);
      }
    }
  }
  if (matched[0] == 0) return 0.0;
  double log_sum = 0;
  std::size_t orders = 0;
  for (std::size_t n = 0; n < 4; ++n) {
    if (total[n] == 0) continue;
    const double p = matched[n] ? static_cast<double>(matched[n]) / static_cast<double>(total[n])
                                : epsilon / static_cast<double>(total[n]);
    log_sum += std::log(p);
    ++orders;
  }
  const double bp = cand_len > ref_len
                        ? 1.0
                        : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  return bp * std::exp(log_sum / static_cast<double>(orders));
}

double rouge_l(std::string_view candidate, std::string_view reference) {
  const auto c = metric_tokens(candidate);
  const auto r = metric_tokens(reference);
  if (c.empty() && r.empty()) return 1.0;
  if (c.empty() || r.empty()) return 0.0;
  std::vector<std::size_t> prev(r.size() + 1, 0), cur(r.size() + 1, 0);
  for (std::size_t i = 1; i <= c.size(); ++i) {
    for (std::size_t j = 1; j <= r.size(); ++j)
      cur[j] = c[i - 1] == r[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  const double lcs = static_cast<double>(prev[r.size()]);
  if (lcs == 0) return 0.0;
  const double p = lcs / static_cast<double>(c.size());
  const double rec = lcs / static_cast<double>(r.size());
  return 2 * p * rec / (p + rec);
}

double recall_at_k(const std::vector<RankedExample>& examples, std::size_t k) {
  if (k == 0) throw Error("k must be at least 1");
  if (examples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& ex : examples) hits += hit(ex, k);
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

nlohmann::ordered_json evaluate(const std::vector<RankedExample>& examples,
                                const std::vector<std::size_t>& ks) {
  std::vector<std::string> tops, golds;
  double rouge_sum = 0;
  for (const auto& ex : examples) {
    tops.push_back(ex.candidates.empty() ? std::string() : ex.candidates.front());
    golds.push_back(ex.gold);
    rouge_sum += rouge_l(tops.back(), ex.gold);
  }
  nlohmann::ordered_json report;
  report["examples"] = examples.size();
  report["bleu4"] = examples.empty() ? 0.0 : bleu4(tops, golds);
  report["rouge_l"] = examples.empty() ? 0.0 : rouge_sum / static_cast<double>(examples.size());
  for (std::size_t k : ks) report["r@" + std::to_string(k)] = recall_at_k(examples, k);
  report["bertscore"] = nullptr;
  report["bleu_smoothing"] = {{"method", "add-epsilon"}, {"epsilon", kBleuEpsilon}};
  report["normalization"] = "lowercase, collapse whitespace, trim";
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < examples.size(); ++i) {
    nlohmann::ordered_json row;
    row["id"] = examples[i].id;
    row["gold"] = examples[i].gold;
    row["top"] = tops[i];
    row["rouge_l"] = rouge_l(tops[i], golds[i]);
    for (std::size_t k : ks) row["hit@" + std::to_string(k)] = hit(examples[i], k);
    rows.push_back(std::move(row));
  }
  report["per_example"] = std::move(rows);
  return report;
}

}  // namespace flowgen
