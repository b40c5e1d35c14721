#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "flowgen/qcfg.hpp"
#include "flowgen/token_grammar.hpp"

namespace flowgen {

namespace detail {
struct Column;
}

/// Incremental Earley recognizer over a token grammar.
///
/// States are immutable values. advance() returns a new state that shares
/// every earlier chart column with its parent, so beam hypotheses can branch
/// from one state at the cost of a single new column.
class DecoderState {
 public:
  /// Column 0 closed under prediction. Throws EmptyLanguage when nothing can
  /// be generated.
  static DecoderState init(std::shared_ptr<const TokenGrammar> grammar);

  /// Sorted tokens t such that consumed + t is a prefix of some string of
  /// the language. Computed on first use and cached.
  const std::vector<TokenId>& allowed_next() const;
  bool is_allowed(TokenId token) const;

  /// True when the consumed tokens form a complete string (EOS allowed).
  bool accepts() const;

  /// Scans `token`. Throws IllegalToken if it is not in allowed_next().
  DecoderState advance(TokenId token) const;

  const std::vector<TokenId>& consumed() const { return consumed_; }
  const TokenGrammar& grammar() const { return *grammar_; }
  const std::shared_ptr<const TokenGrammar>& grammar_ptr() const { return grammar_; }

  /// Total number of Earley items across all columns.
  std::size_t chart_size() const;

  /// A parse tree for the consumed tokens when the state accepts.
  std::optional<Derivation> derivation() const;

 private:
  DecoderState() = default;

  std::shared_ptr<const TokenGrammar> grammar_;
  std::vector<std::shared_ptr<const detail::Column>> chart_;
  std::vector<TokenId> consumed_;
};

}  // namespace flowgen
