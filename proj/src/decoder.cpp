#include "flowgen/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <set>

#include "flowgen/earley.hpp"
#include "flowgen/errors.hpp"

namespace flowgen {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Hyp {
  std::vector<TokenId> tokens;
  double logprob = 0.0;
  std::optional<DecoderState> state;
  bool finished = false;
  std::string text;
};

double normalized(double logprob, std::size_t len, double length_norm) {
  if (length_norm == 0.0) return logprob;
  return logprob / std::pow(static_cast<double>(std::max<std::size_t>(len, 1)), length_norm);
}

Candidate to_candidate(const Hyp& h, double length_norm) {
  return Candidate{h.text, normalized(h.logprob, h.tokens.size(), length_norm), h.logprob,
                   h.tokens.size()};
}

bool better(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.text < b.text;
}

std::vector<TokenId> with_context(std::span<const TokenId> context, const std::vector<TokenId>& t) {
  std::vector<TokenId> all(context.begin(), context.end());
  all.insert(all.end(), t.begin(), t.end());
  return all;
}

// Step-synchronous beam search. `allowed` fills the token mask for a live
// hypothesis and says whether EOS may follow; `advance` builds the child.
template <typename Allowed, typename Advance>
DecodeResult step_beam(const LmScorer& scorer, std::span<const TokenId> context,
                       const DecodeConfig& config, Hyp root, Allowed allowed, Advance advance,
                       bool finish_at_max_len) {
  DecodeResult out;
  const auto eos_id = static_cast<TokenId>(scorer.vocab_size());
  std::vector<Hyp> live;
  live.push_back(std::move(root));
  std::vector<Candidate> finished;
  std::set<std::string> finished_texts;
  auto finish = [&](Hyp h) {
    h.finished = true;
    Candidate c = to_candidate(h, config.length_norm);
    if (finished_texts.insert(c.text).second) finished.push_back(std::move(c));
  };

  while (!live.empty()) {
    std::vector<Hyp> next;
    for (auto& h : live) {
      TokenMask mask;
      bool eos = false;
      if (h.tokens.size() < config.max_len) {
        eos = allowed(h, mask);
      } else if (finish_at_max_len) {
        finish(std::move(h));
        continue;
      } else {
        TokenMask ignored;
        eos = allowed(h, ignored);
      }
      if (eos) mask.push_back(eos_id);
      if (mask.empty()) {
        ++out.diagnostics.pruned;
        continue;
      }
      ++out.diagnostics.expanded;
      const LogProbs lp = scorer.next_logprobs(with_context(context, h.tokens), &mask,
                                               config.renormalize);
      for (TokenId t : mask) {
        if (t == eos_id) {
          if (lp.eos == kNegInf) continue;
          Hyp done = h;
          done.logprob += lp.eos;
          finish(std::move(done));
          continue;
        }
        const double l = lp.tokens[static_cast<std::size_t>(t)];
        if (l == kNegInf) continue;
        next.push_back(advance(h, t, l));
      }
    }
    ++out.diagnostics.steps;
    std::sort(next.begin(), next.end(), [&](const Hyp& a, const Hyp& b) {
      return better(to_candidate(a, config.length_norm), to_candidate(b, config.length_norm));
    });
    if (next.size() > config.beam) {
      out.diagnostics.pruned += next.size() - config.beam;
      next.resize(config.beam);
    }
    live = std::move(next);
    // With pure log-probability scores no live hypothesis can overtake the
    // K-th finished one once it is already behind.
    if (config.length_norm == 0.0 && finished.size() >= config.beam && !live.empty()) {
      std::sort(finished.begin(), finished.end(), better);
      if (live.front().logprob < finished[config.beam - 1].score) break;
    }
  }
  std::sort(finished.begin(), finished.end(), better);
  if (finished.size() > config.beam) finished.resize(config.beam);
  out.candidates = std::move(finished);
  return out;
}

DecodeResult constrained_beam(std::shared_ptr<const TokenGrammar> grammar, const LmScorer& scorer,
                              std::span<const TokenId> context, const DecodeConfig& config) {
  const Tokenizer& tok = grammar->tokenizer();
  Hyp root;
  root.state = DecoderState::init(grammar);
  auto allowed = [](const Hyp& h, TokenMask& mask) {
    mask = h.state->allowed_next();
    return h.state->accepts();
  };
  auto advance = [&](const Hyp& h, TokenId t, double l) {
    Hyp c;
    c.tokens = h.tokens;
    c.tokens.push_back(t);
    c.logprob = h.logprob + l;
    c.state = h.state->advance(t);
    c.text = tok.decode(c.tokens);
    return c;
  };
  return step_beam(scorer, context, config, std::move(root), allowed, advance, false);
}

// Uniform-cost search: log-probabilities only decrease as tokens are added,
// so finished hypotheses leave the queue in exact score order. Live entries
// go before finished ones of equal score so that every tie is discovered
// before it is reported; equal finished scores leave in text order.
struct QueueOrder {
  bool operator()(const Hyp& a, const Hyp& b) const {
    if (a.logprob != b.logprob) return a.logprob < b.logprob;
    if (a.finished != b.finished) return a.finished;
    return a.text > b.text;
  }
};

std::optional<DecodeResult> constrained_exact(std::shared_ptr<const TokenGrammar> grammar,
                                              const LmScorer& scorer,
                                              std::span<const TokenId> context,
                                              const DecodeConfig& config) {
  const Tokenizer& tok = grammar->tokenizer();
  const auto eos_id = static_cast<TokenId>(scorer.vocab_size());
  DecodeResult out;
  std::priority_queue<Hyp, std::vector<Hyp>, QueueOrder> queue;
  Hyp root;
  root.state = DecoderState::init(grammar);
  queue.push(std::move(root));
  std::set<std::string> texts;
  while (!queue.empty() && out.candidates.size() < config.beam) {
    Hyp h = queue.top();
    queue.pop();
    if (h.finished) {
      if (texts.insert(h.text).second) out.candidates.push_back(to_candidate(h, 0.0));
      continue;
    }
    if (++out.diagnostics.expanded > config.expansion_budget) return std::nullopt;
    out.diagnostics.steps = std::max(out.diagnostics.steps, h.tokens.size());
    TokenMask mask;
    if (h.tokens.size() < config.max_len) mask = h.state->allowed_next();
    if (h.state->accepts()) mask.push_back(eos_id);
    if (mask.empty()) {
      ++out.diagnostics.pruned;
      continue;
    }
    const LogProbs lp =
        scorer.next_logprobs(with_context(context, h.tokens), &mask, config.renormalize);
    for (TokenId t : mask) {
      const double l = t == eos_id ? lp.eos : lp.tokens[static_cast<std::size_t>(t)];
      if (l == kNegInf) continue;
      Hyp c;
      c.tokens = h.tokens;
      c.logprob = h.logprob + l;
      if (t == eos_id) {
        c.finished = true;
        c.text = h.text;
      } else {
        c.tokens.push_back(t);
        c.state = h.state->advance(t);
        c.text = tok.decode(c.tokens);
      }
      queue.push(std::move(c));
    }
  }
  out.diagnostics.pruned += queue.size();
  return out;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

DecodeMode parse_mode(std::string_view text) {
  if (text == "constrained") return DecodeMode::Constrained;
  if (text == "unconstrained") return DecodeMode::Unconstrained;
  if (text == "sample") return DecodeMode::Sample;
  throw Error("unknown mode '" + std::string(text) + "'");
}

std::string_view mode_name(DecodeMode mode) {
  switch (mode) {
    case DecodeMode::Constrained: return "constrained";
    case DecodeMode::Unconstrained: return "unconstrained";
    case DecodeMode::Sample: return "sample";
  }
  return "";
}

SearchKind parse_search(std::string_view text) {
  if (text == "exact") return SearchKind::Exact;
  if (text == "beam") return SearchKind::Beam;
  throw Error("unknown search '" + std::string(text) + "', expected exact or beam");
}

DecodeResult constrained_decode(std::shared_ptr<const TokenGrammar> grammar,
                                const LmScorer& scorer, std::span<const TokenId> context,
                                const DecodeConfig& config) {
  if (config.beam == 0) throw Error("beam size must be at least 1");
  if (grammar->tokenizer().size() != scorer.vocab_size())
    throw Error("grammar tokenizer and scorer disagree on the vocabulary size");
  DecodeResult out;
  bool fell_back = false;
  if (config.search == SearchKind::Exact && config.length_norm == 0.0) {
    if (auto exact = constrained_exact(grammar, scorer, context, config))
      out = std::move(*exact);
    else
      fell_back = true;
  }
  if (config.search == SearchKind::Beam || config.length_norm != 0.0 || fell_back) {
    out = constrained_beam(grammar, scorer, context, config);
    out.diagnostics.fell_back = fell_back;
  }
  out.mode = DecodeMode::Constrained;
  if (out.candidates.empty())
    throw NoCompletion("no grammatical string completes within " + std::to_string(config.max_len) +
                       " tokens");
  return out;
}

DecodeResult unconstrained_decode(const Tokenizer& tokenizer, const LmScorer& scorer,
                                  std::span<const TokenId> context, const DecodeConfig& config) {
  if (config.beam == 0) throw Error("beam size must be at least 1");
  if (tokenizer.size() != scorer.vocab_size())
    throw Error("tokenizer and scorer disagree on the vocabulary size");
  TokenMask all;
  for (std::size_t i = 0; i < tokenizer.size(); ++i)
    if (!tokenizer.is_special(static_cast<TokenId>(i))) all.push_back(static_cast<TokenId>(i));
  auto allowed = [&](const Hyp&, TokenMask& mask) {
    mask = all;
    return true;
  };
  auto advance = [&](const Hyp& h, TokenId t, double l) {
    Hyp c;
    c.tokens = h.tokens;
    c.tokens.push_back(t);
    c.logprob = h.logprob + l;
    c.text = tokenizer.decode(c.tokens);
    return c;
  };
  DecodeResult out = step_beam(scorer, context, config, Hyp{}, allowed, advance, true);
  out.mode = DecodeMode::Unconstrained;
  return out;
}

DecodeResult sample_decode(const Qcfg& grammar, const DecodeConfig& config) {
  DecodeResult out;
  out.mode = DecodeMode::Sample;
  std::set<std::string> seen;
  const std::size_t attempts = 50 * config.beam + 100;
  for (std::size_t a = 0; a < attempts && out.candidates.size() < config.beam; ++a) {
    auto [text, logp] = sample_scored(grammar, splitmix(splitmix(config.seed) + a), config.max_depth);
    ++out.diagnostics.steps;
    if (!seen.insert(text).second) continue;
    out.candidates.push_back(Candidate{text, 0.0, logp, split_words(text).size()});
  }
  out.diagnostics.grammar_size = grammar.productions().size();
  return out;
}

DecodeResult generate(const GenerateInput& input, const FunctionRegistry& registry,
                      const Transducer* transducer, const LmProvider& lm, DecodeMode mode,
                      const DecodeConfig& config, const PromptFlags& prompt_flags,
                      ExecContext& ctx) {
  DataflowGraph executed = execute(input.graph, registry, ctx);
  const std::string prompt = build_prompt(executed, prompt_flags, input.utterance);
  std::vector<std::string> words = pretokenize(prompt);

  if (mode == DecodeMode::Unconstrained) {
    LmSession s = lm.session(words);
    const auto context = encode_context(*s.tokenizer, prompt);
    return unconstrained_decode(*s.tokenizer, *s.scorer, context, config);
  }

  if (!transducer) throw Error(std::string(mode_name(mode)) + " decoding needs a rule file");
  TransduceOptions topts;
  topts.max_depth = config.max_depth;
  TransduceResult tr = transduce(*transducer, executed, ctx, topts);
  if (mode == DecodeMode::Sample) return sample_decode(tr.grammar, config);

  words.insert(words.end(), tr.grammar.sigma().begin(), tr.grammar.sigma().end());
  LmSession s = lm.session(words);
  auto tg = std::make_shared<const TokenGrammar>(compile_tokens(tr.grammar, s.tokenizer));
  const auto context = encode_context(*s.tokenizer, prompt);
  DecodeResult out = constrained_decode(tg, *s.scorer, context, config);
  out.diagnostics.grammar_size = tr.grammar.productions().size();
  return out;
}

}  // namespace flowgen
