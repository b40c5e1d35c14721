#include "flowgen/token_grammar.hpp"

#include <map>

#include "flowgen/errors.hpp"

namespace flowgen {

TokenGrammar::TokenGrammar(std::vector<std::string> nonterminals, std::size_t start,
                           std::vector<TokenProduction> productions,
                           std::shared_ptr<const Tokenizer> tokenizer)
    : nonterminals_(std::move(nonterminals)),
      start_(start),
      productions_(std::move(productions)),
      by_lhs_(nonterminals_.size()),
      tokenizer_(std::move(tokenizer)) {
  if (!tokenizer_) throw Error("token grammar needs a tokenizer");
  if (start_ >= nonterminals_.size()) throw InvalidGrammar("start nonterminal out of range");
  for (std::size_t i = 0; i < productions_.size(); ++i) {
    const auto& p = productions_[i];
    if (p.lhs >= nonterminals_.size()) throw InvalidGrammar("production lhs out of range");
    if (p.rhs.empty()) throw InvalidGrammar("production with empty rhs");
    for (const auto& s : p.rhs) {
      if (s.is_nonterminal() ? *s.nonterminal >= nonterminals_.size() : s.tokens.empty())
        throw InvalidGrammar("malformed token production");
    }
    by_lhs_[p.lhs].push_back(i);
  }
}

TokenGrammar compile_tokens(const Qcfg& grammar, std::shared_ptr<const Tokenizer> tokenizer) {
  std::map<QcfgNonterminal, std::size_t> index;
  std::vector<std::string> names;
  auto intern = [&](const QcfgNonterminal& nt) {
    auto [it, fresh] = index.emplace(nt, names.size());
    if (fresh) names.push_back(nt.str());
    return it->second;
  };
  const std::size_t start = intern(grammar.start());
  std::map<std::string, std::vector<TokenId>> spelled;
  std::vector<TokenProduction> out;
  out.reserve(grammar.productions().size());
  for (const auto& p : grammar.productions()) {
    TokenProduction tp;
    tp.lhs = intern(p.lhs);
    for (const auto& sym : p.rhs) {
      TokenSymbol ts;
      if (auto* nt = std::get_if<QcfgNonterminal>(&sym)) {
        ts.nonterminal = intern(*nt);
      } else {
        const std::string& w = std::get<Terminal>(sym).word;
        auto it = spelled.find(w);
        if (it == spelled.end()) it = spelled.emplace(w, tokenizer->encode(w)).first;
        ts.tokens = it->second;
      }
      tp.rhs.push_back(std::move(ts));
    }
    out.push_back(std::move(tp));
  }
  return TokenGrammar(std::move(names), start, std::move(out), std::move(tokenizer));
}

}  // namespace flowgen
