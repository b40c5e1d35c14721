#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowgen/tokenizer.hpp"

namespace flowgen {

/// Next-token distribution: one entry per vocabulary id plus end-of-sequence.
struct LogProbs {
  std::vector<double> tokens;
  double eos = 0.0;
};

/// Allowed continuations, sorted. The id equal to the vocabulary size stands
/// for end-of-sequence, as on the wire.
using TokenMask = std::vector<TokenId>;

/// Scores the next token given the context. Unmasked output sums to 1 over
/// the vocabulary and EOS. With a mask, entries outside it are -inf and, when
/// `renormalize` is set, the rest sum to 1. Implementations are read-only and
/// safe to call concurrently.
class LmScorer {
 public:
  virtual ~LmScorer() = default;
  virtual std::size_t vocab_size() const = 0;
  virtual LogProbs next_logprobs(std::span<const TokenId> context, const TokenMask* mask = nullptr,
                                 bool renormalize = true) const = 0;
};

/// Masks and optionally renormalizes a full distribution.
LogProbs apply_mask(LogProbs full, const TokenMask& mask, bool renormalize);

/// Scorers that compute a full distribution locally.
class LocalScorer : public LmScorer {
 public:
  LogProbs next_logprobs(std::span<const TokenId> context, const TokenMask* mask = nullptr,
                         bool renormalize = true) const final;

 protected:
  virtual LogProbs distribution(std::span<const TokenId> context) const = 0;
};

/// Every token and EOS equally likely: -ln(|V| + 1).
class UniformScorer : public LocalScorer {
 public:
  explicit UniformScorer(std::size_t vocab_size) : size_(vocab_size) {}
  std::size_t vocab_size() const override { return size_; }

 protected:
  LogProbs distribution(std::span<const TokenId> context) const override;

 private:
  std::size_t size_;
};

inline constexpr std::string_view kBosWord = "<s>";
inline constexpr std::string_view kEosWord = "</s>";

/// One training sequence: the prompt pieces condition the model, only the
/// response words (and the final EOS) are counted as predictions.
struct NgramExample {
  std::vector<std::string> context;
  std::vector<std::string> response;
};

/// Word n-gram counts over surface strings.
///
/// Probabilities are add-k estimates whose prior is the next lower order:
///   P_m(w | h) = (c(h, w) + k V P_{m-1}(w | h')) / (c(h) + k V)
/// with V the scorer's vocabulary size plus one for EOS, h' the history
/// without its oldest word, and P_0 uniform. Order 1 is plain add-k; an
/// unseen history falls back to the lower order unchanged.
class NgramModel {
 public:
  static NgramModel train(const std::vector<NgramExample>& corpus, std::size_t order,
                          double k = 0.1);

  std::size_t order() const { return order_; }
  double k() const { return k_; }
  /// Every word seen in training, context or response, sorted.
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }

  /// c(history, word); histories have between 0 and order-1 words.
  std::size_t count(const std::vector<std::string>& history, const std::string& word) const;
  /// Successor counts of `history`, or null when it was never seen.
  const std::map<std::string, std::size_t>* successors(const std::vector<std::string>& history) const;

  std::string to_json() const;
  static NgramModel from_json(std::string_view text);
  void save(const std::string& path) const;
  static NgramModel load(const std::string& path);

  bool operator==(const NgramModel&) const = default;

 private:
  std::size_t order_ = 1;
  double k_ = 0.1;
  std::vector<std::string> vocabulary_;
  std::map<std::string, std::map<std::string, std::size_t>> counts_;  // key: joined history
};

/// Scores a tokenizer's vocabulary with an n-gram model. Histories are read
/// back as surface strings, so the model and tokenizer only need to agree on
/// spelling.
class NgramScorer : public LocalScorer {
 public:
  NgramScorer(std::shared_ptr<const NgramModel> model, std::shared_ptr<const Tokenizer> tokenizer);
  std::size_t vocab_size() const override { return tokenizer_->size(); }

 protected:
  LogProbs distribution(std::span<const TokenId> context) const override;

 private:
  std::shared_ptr<const NgramModel> model_;
  std::shared_ptr<const Tokenizer> tokenizer_;
};

/// A tokenizer and a scorer over the same vocabulary.
struct LmSession {
  std::shared_ptr<const Tokenizer> tokenizer;
  std::shared_ptr<const LmScorer> scorer;
};

/// Builds sessions for one input. `words` are words the session must be able
/// to spell (grammar terminals, prompt pieces); providers with a fixed
/// vocabulary ignore them.
class LmProvider {
 public:
  virtual ~LmProvider() = default;
  virtual LmSession session(const std::vector<std::string>& words) const = 0;
};

class UniformProvider : public LmProvider {
 public:
  LmSession session(const std::vector<std::string>& words) const override;
};

class NgramProvider : public LmProvider {
 public:
  explicit NgramProvider(std::shared_ptr<const NgramModel> model) : model_(std::move(model)) {}
  LmSession session(const std::vector<std::string>& words) const override;

 private:
  std::shared_ptr<const NgramModel> model_;
};

/// Reads a vocabulary file: one token per line, id = line number. A file
/// with any "##" piece yields a subword tokenizer.
std::shared_ptr<const Tokenizer> load_vocabulary(const std::string& path);

/// "uniform", "ngram:PATH" or "remote:URL" (the latter needs `vocab_path`).
std::unique_ptr<LmProvider> make_provider(const std::string& spec, const std::string& vocab_path = {});

}  // namespace flowgen
