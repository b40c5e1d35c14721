#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "flowgen/graph.hpp"
#include "json.hpp"

namespace flowgen {

/// Grammar symbol aligned to a node: (type, node), written "TYPE@node".
struct QcfgNonterminal {
  std::string type;
  NodeId node;

  std::string str() const { return type + "@" + node.str(); }
  static QcfgNonterminal parse(std::string_view text);

  auto operator<=>(const QcfgNonterminal&) const = default;
};

struct Terminal {
  std::string word;
  auto operator<=>(const Terminal&) const = default;
};

using QcfgSymbol = std::variant<Terminal, QcfgNonterminal>;

struct QcfgProduction {
  QcfgNonterminal lhs;
  std::vector<QcfgSymbol> rhs;

  bool operator==(const QcfgProduction&) const = default;
};

std::string to_string(const QcfgProduction& p);

/// Parse tree: the production used and one child per nonterminal on its rhs.
struct Derivation {
  std::size_t production = 0;
  std::vector<Derivation> children;
};

/// Per-input grammar. Construction validates it: rhs non-empty, terminal
/// words non-empty and whitespace-free, every rhs nonterminal and the start
/// have productions, and every reachable nonterminal derives some string.
class Qcfg {
 public:
  Qcfg(QcfgNonterminal start, std::vector<QcfgProduction> productions);

  const QcfgNonterminal& start() const { return start_; }
  const std::vector<QcfgProduction>& productions() const { return productions_; }
  /// Production indices per nonterminal, in production order.
  const std::vector<std::size_t>& productions_for(const QcfgNonterminal& nt) const;
  std::vector<QcfgNonterminal> nonterminals() const;
  /// Sorted terminal vocabulary.
  const std::vector<std::string>& sigma() const { return sigma_; }

  /// Words derived by `d`.
  std::vector<std::string> yield(const Derivation& d) const;

  nlohmann::ordered_json to_json() const;
  static Qcfg from_json(const nlohmann::json& j);
  std::string dump() const;  // pretty-printed JSON, newline-terminated

  bool operator==(const Qcfg& o) const {
    return start_ == o.start_ && productions_ == o.productions_;
  }

 private:
  QcfgNonterminal start_;
  std::vector<QcfgProduction> productions_;
  std::map<QcfgNonterminal, std::vector<std::size_t>> by_lhs_;
  std::vector<std::string> sigma_;
};

/// Yield of a random derivation: each expanded nonterminal picks uniformly
/// among its productions that can still complete within the remaining depth
/// budget. Deterministic for a given seed. Throws DepthExceeded when no
/// derivation fits in `max_depth`.
std::string sample(const Qcfg& grammar, std::uint64_t seed, std::size_t max_depth = 64);

/// Same as sample(), also returning the log-probability of the choices made.
std::pair<std::string, double> sample_scored(const Qcfg& grammar, std::uint64_t seed,
                                             std::size_t max_depth = 64);

/// Distinct strings of the language in length-lexicographic order (word
/// count first, then word-by-word), at most `limit` of them and none longer
/// than `max_words`. Exhaustive for finite languages smaller than `limit`.
std::vector<std::string> enumerate(const Qcfg& grammar, std::size_t limit,
                                   std::size_t max_words = SIZE_MAX);

/// Earley membership test over whitespace-separated words. Returns a
/// derivation whose yield is `words` on success.
std::optional<Derivation> parse(const Qcfg& grammar, const std::vector<std::string>& words);
bool contains(const Qcfg& grammar, const std::vector<std::string>& words);
bool contains(const Qcfg& grammar, std::string_view sentence);

std::vector<std::string> split_words(std::string_view text);
std::string join_words(const std::vector<std::string>& words);

}  // namespace flowgen
