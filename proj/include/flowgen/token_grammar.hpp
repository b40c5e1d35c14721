#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flowgen/qcfg.hpp"
#include "flowgen/tokenizer.hpp"

namespace flowgen {

/// Rhs symbol of a token grammar: a nonterminal index or a terminal spelled
/// as one or more token ids.
struct TokenSymbol {
  std::optional<std::size_t> nonterminal;
  std::vector<TokenId> tokens;

  bool is_nonterminal() const { return nonterminal.has_value(); }
};

struct TokenProduction {
  std::size_t lhs = 0;
  std::vector<TokenSymbol> rhs;
};

/// A Qcfg whose terminals have been expanded into token-id sequences.
/// Production i corresponds to production i of the source grammar.
class TokenGrammar {
 public:
  TokenGrammar(std::vector<std::string> nonterminals, std::size_t start,
               std::vector<TokenProduction> productions,
               std::shared_ptr<const Tokenizer> tokenizer);

  std::size_t start() const { return start_; }
  const std::vector<std::string>& nonterminals() const { return nonterminals_; }
  const std::vector<TokenProduction>& productions() const { return productions_; }
  const std::vector<std::size_t>& productions_for(std::size_t nonterminal) const {
    return by_lhs_[nonterminal];
  }
  const Tokenizer& tokenizer() const { return *tokenizer_; }
  std::shared_ptr<const Tokenizer> tokenizer_ptr() const { return tokenizer_; }

 private:
  std::vector<std::string> nonterminals_;
  std::size_t start_;
  std::vector<TokenProduction> productions_;
  std::vector<std::vector<std::size_t>> by_lhs_;
  std::shared_ptr<const Tokenizer> tokenizer_;
};

/// Expands every terminal word through `tokenizer`. Throws UnknownToken if a
/// word cannot be covered.
TokenGrammar compile_tokens(const Qcfg& grammar, std::shared_ptr<const Tokenizer> tokenizer);

}  // namespace flowgen
