#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowgen/graph.hpp"
#include "flowgen/lm.hpp"
#include "flowgen/prompt.hpp"
#include "flowgen/qcfg.hpp"
#include "flowgen/registry.hpp"
#include "flowgen/token_grammar.hpp"
#include "flowgen/transducer.hpp"

namespace flowgen {

enum class DecodeMode { Constrained, Unconstrained, Sample };
enum class SearchKind { Exact, Beam };

DecodeMode parse_mode(std::string_view text);
std::string_view mode_name(DecodeMode mode);
SearchKind parse_search(std::string_view text);

struct DecodeConfig {
  std::size_t beam = 5;
  std::size_t max_len = 64;
  double length_norm = 0.0;
  bool renormalize = true;
  /// Constrained mode only. Exact best-first search returns the true top-K
  /// when length_norm is 0; otherwise (or past the expansion budget) it
  /// falls back to step-synchronous beam search.
  SearchKind search = SearchKind::Exact;
  std::size_t expansion_budget = 200000;
  std::uint64_t seed = 0;
  std::size_t max_depth = 64;
};

struct Candidate {
  std::string text;
  double score = 0.0;    // logprob / length^length_norm
  double logprob = 0.0;  // summed token logprobs including EOS
  std::size_t length = 0;
};

struct DecodeDiagnostics {
  std::size_t steps = 0;
  std::size_t expanded = 0;
  std::size_t pruned = 0;
  std::size_t grammar_size = 0;
  bool fell_back = false;
};

/// Candidates ordered by score (desc), ties by text (asc).
struct DecodeResult {
  DecodeMode mode = DecodeMode::Constrained;
  std::vector<Candidate> candidates;
  DecodeDiagnostics diagnostics;
};

/// Highest-scoring strings of the grammar under the LM: at each step only
/// tokens the Earley state allows are scored, and EOS only when it accepts.
/// Throws NoCompletion when nothing completes within max_len tokens.
DecodeResult constrained_decode(std::shared_ptr<const TokenGrammar> grammar,
                                const LmScorer& scorer, std::span<const TokenId> context,
                                const DecodeConfig& config);

/// Step-synchronous beam search over every non-special token plus EOS.
/// Hypotheses reaching max_len are finished as they stand.
DecodeResult unconstrained_decode(const Tokenizer& tokenizer, const LmScorer& scorer,
                                  std::span<const TokenId> context, const DecodeConfig& config);

/// Up to `config.beam` distinct random derivations in draw order. Samples are
/// unranked: score is 0 and logprob holds the probability of the sampler's
/// choices.
DecodeResult sample_decode(const Qcfg& grammar, const DecodeConfig& config);

struct GenerateInput {
  DataflowGraph graph;  // parsed, not yet executed
  std::string utterance;
};

/// execute -> transduce -> compile_tokens -> decode (or sample). The
/// unconstrained mode never looks at the rules; `transducer` may then be null.
DecodeResult generate(const GenerateInput& input, const FunctionRegistry& registry,
                      const Transducer* transducer, const LmProvider& lm, DecodeMode mode,
                      const DecodeConfig& config, const PromptFlags& prompt, ExecContext& ctx);

inline DecodeResult generate(const GenerateInput& input, const Transducer& transducer,
                             const LmProvider& lm, DecodeMode mode, const DecodeConfig& config,
                             const PromptFlags& prompt, ExecContext& ctx) {
  return generate(input, transducer.registry(), &transducer, lm, mode, config, prompt, ctx);
}

}  // namespace flowgen
