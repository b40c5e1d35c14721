#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "flowgen/value.hpp"

namespace flowgen {

class FunctionRegistry;

/// Tree pattern over op names. `_` matches anything, a bare name captures the
/// node, `name:pattern` captures and constrains, `op(p, ...)` requires the op
/// and exact arity.
struct Pattern {
  enum class Kind { Wildcard, Capture, Op };
  Kind kind = Kind::Wildcard;
  std::string capture;  // also set for `name:op(...)`
  std::string op;
  std::vector<Pattern> args;
};

/// Guard and let expressions.
struct RuleExpr {
  enum class Kind { Literal, Var, Call };
  Kind kind = Kind::Literal;
  Value literal;
  std::string name;  // variable or function name
  std::vector<RuleExpr> args;
};

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };

/// `lhs` alone must evaluate to a Boolean; with `op` it is a comparison.
struct Guard {
  RuleExpr lhs;
  std::optional<CompareOp> op;
  RuleExpr rhs;
};

struct Binding {
  std::string var;
  RuleExpr expr;
};

struct TemplateTerminal {
  std::string word;
};
struct TemplateNonterminal {
  std::string type;
  std::string var;
};
/// `<var>`: expands to the canonical rendering of the node's value.
struct TemplateValueCopy {
  std::string var;
};
using TemplateItem = std::variant<TemplateTerminal, TemplateNonterminal, TemplateValueCopy>;

struct TransductionRule {
  std::string name;
  std::string head;
  Pattern pattern;
  std::vector<Guard> guards;
  std::vector<Binding> lets;
  std::vector<TemplateItem> response;
  std::size_t line = 0;
};

/// A parsed rule file: declared nonterminal set, start type and rules.
struct RuleSet {
  std::vector<std::string> nonterminals;
  std::string start;
  std::vector<TransductionRule> rules;
};

/// Nonterminal type served by the built-in lexicalization rules.
inline constexpr std::string_view kLexType = "LEX";

/// Name bound to the node a rule is applied to.
inline constexpr std::string_view kSelfVar = "self";

/// Parses the rule DSL:
///
///   start S
///   nonterminals S PP EVENT
///   rule S [as name] on findEventsOnDate(date)
///     where size(self) == 1
///     let num = size(self); event = first(self)
///     say "i found {LEX <num>} event {PP <date>} . {EVENT <event>} ."
///
/// `#` starts a comment. Checks statically that every variable is bound
/// before use, every nonterminal is declared, templates are non-empty and,
/// when `registry` is given, that called functions exist with the right arity.
RuleSet parse_rules(std::string_view text, const FunctionRegistry* registry = nullptr);

std::vector<TemplateItem> parse_template(std::string_view text);

}  // namespace flowgen
