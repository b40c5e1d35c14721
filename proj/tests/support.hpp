#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "flowgen/calendar.hpp"
#include "flowgen/decoder.hpp"
#include "flowgen/earley.hpp"
#include "flowgen/errors.hpp"
#include "flowgen/pipeline.hpp"
#include "flowgen/sexpr.hpp"
#include "flowgen/transducer.hpp"

namespace testing {

using namespace flowgen;

inline std::string source_path(const std::string& rel) {
  return std::string(FLOWGEN_SOURCE_DIR) + "/" + rel;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline const char* kNow = "2022-03-14T09:00";

inline const std::vector<std::string>& fixture_graphs() {
  static const std::vector<std::string> names{
      "meetings_tomorrow", "meetings_today", "count_in_two_days", "first_start",
      "first_subject",     "attendees",      "free_day",          "create"};
  return names;
}

inline Pipeline calendar_pipeline(PromptFlags prompt = {}) {
  Pipeline p;
  auto reg = std::make_shared<FunctionRegistry>(calendar_registry());
  p.registry = reg;
  p.transducer = std::make_shared<Transducer>(
      Transducer::from_text(slurp(source_path("data/calendar/calendar.rules")), reg));
  p.calendar = Calendar::load(source_path("data/calendar/calendar.json"));
  p.now = DateTime::parse(kNow);
  p.prompt = prompt;
  return p;
}

inline DataflowGraph fixture_graph(const Pipeline& p, const std::string& name) {
  return parse_graph(slurp(source_path("data/calendar/graphs/" + name + ".sexp")),
                     p.registry.get());
}

struct Fixture {
  DataflowGraph executed;
  TransduceResult result;
};

inline Fixture transduce_fixture(const Pipeline& p, const DataflowGraph& graph) {
  ExecContext ctx = p.fresh_context();
  DataflowGraph g = execute(graph, *p.registry, ctx);
  TransduceResult r = transduce(*p.transducer, g, ctx);
  return Fixture{std::move(g), std::move(r)};
}

inline std::vector<Example> synthetic(const std::string& split, const Pipeline& p) {
  return load_dataset(source_path("data/synthetic/" + split + ".jsonl"), *p.registry);
}

inline QcfgNonterminal nt(const std::string& type, int i = 0) {
  return QcfgNonterminal{type, NodeId("v" + std::to_string(i))};
}

/// Random small grammar over words a..d. With `acyclic`, nonterminal i only
/// refers to nonterminals j > i, so the language is finite. Every
/// nonterminal gets at least one all-terminal production, so every one is
/// productive.
inline Qcfg random_grammar(std::mt19937_64& rng, bool acyclic, std::size_t words = 4) {
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const int n = uni(1, 4);
  std::vector<QcfgProduction> prods;
  for (int i = 0; i < n; ++i) {
    const int count = uni(1, 3);
    for (int k = 0; k < count; ++k) {
      QcfgProduction p{nt("N", i), {}};
      const int len = uni(1, 3);
      for (int s = 0; s < len; ++s) {
        const bool can_nt = k > 0 && (acyclic ? i + 1 < n : true);
        if (can_nt && uni(0, 2) == 0) {
          const int j = acyclic ? uni(i + 1, n - 1) : uni(0, n - 1);
          p.rhs.push_back(nt("N", j));
        } else {
          p.rhs.push_back(Terminal{std::string(1, static_cast<char>('a' + uni(0, static_cast<int>(words) - 1)))});
        }
      }
      prods.push_back(std::move(p));
    }
  }
  return Qcfg(nt("N", 0), std::move(prods));
}

/// Tokens that extend `prefix` within `language`, plus EOS (= vocab size)
/// when the prefix itself is in it.
inline std::vector<TokenId> oracle_allowed(const std::vector<std::vector<TokenId>>& language,
                                           const std::vector<TokenId>& prefix, TokenId eos) {
  std::set<TokenId> out;
  for (const auto& s : language) {
    if (s.size() < prefix.size() || !std::equal(prefix.begin(), prefix.end(), s.begin())) continue;
    out.insert(s.size() == prefix.size() ? eos : s[prefix.size()]);
  }
  return {out.begin(), out.end()};
}

/// Brute-force constrained scores: every string of a finite language scored
/// token by token under the masks its own prefixes induce.
inline std::vector<Candidate> oracle_topk(const Qcfg& grammar, const Tokenizer& tok,
                                          const LmScorer& scorer, std::span<const TokenId> context,
                                          std::size_t k, bool renormalize) {
  const auto strings = enumerate(grammar, 10001);
  if (strings.size() > 10000) throw Error("language too large for the oracle");
  std::vector<std::vector<TokenId>> lang;
  for (const auto& s : strings) {
    std::vector<TokenId> ids;
    for (const auto& w : split_words(s)) {
      auto e = tok.encode(w);
      ids.insert(ids.end(), e.begin(), e.end());
    }
    lang.push_back(std::move(ids));
  }
  const auto eos = static_cast<TokenId>(tok.size());
  std::vector<Candidate> scored;
  for (const auto& ids : lang) {
    double lp = 0.0;
    std::vector<TokenId> prefix;
    for (std::size_t i = 0; i <= ids.size(); ++i) {
      const TokenMask mask = oracle_allowed(lang, prefix, eos);
      std::vector<TokenId> ctx(context.begin(), context.end());
      ctx.insert(ctx.end(), prefix.begin(), prefix.end());
      const LogProbs d = scorer.next_logprobs(ctx, &mask, renormalize);
      if (i == ids.size()) {
        lp += d.eos;
      } else {
        lp += d.tokens[static_cast<std::size_t>(ids[i])];
        prefix.push_back(ids[i]);
      }
    }
    scored.push_back(Candidate{tok.decode(ids), lp, lp, ids.size()});
  }
  std::sort(scored.begin(), scored.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.text < b.text;
  });
  std::vector<Candidate> out;
  std::set<std::string> seen;
  for (const auto& c : scored) {
    if (out.size() == k) break;
    if (seen.insert(c.text).second) out.push_back(c);
  }
  return out;
}

/// Deterministic pseudo-random distributions keyed on (seed, context).
class HashScorer : public LocalScorer {
 public:
  HashScorer(std::size_t vocab, std::uint64_t seed) : vocab_(vocab), seed_(seed) {}
  std::size_t vocab_size() const override { return vocab_; }

 protected:
  LogProbs distribution(std::span<const TokenId> context) const override {
    std::uint64_t h = seed_ * 0x9E3779B97F4A7C15ULL + 1;
    for (TokenId t : context) h = (h ^ static_cast<std::uint64_t>(t + 1)) * 0x100000001B3ULL;
    std::mt19937_64 rng(h);
    std::vector<double> w(vocab_ + 1);
    double z = 0;
    for (double& x : w) z += (x = std::uniform_real_distribution<double>(0.01, 1.0)(rng));
    LogProbs out;
    for (std::size_t i = 0; i < vocab_; ++i) out.tokens.push_back(std::log(w[i] / z));
    out.eos = std::log(w[vocab_] / z);
    return out;
  }

 private:
  std::size_t vocab_;
  std::uint64_t seed_;
};

}  // namespace testing
