#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flowgen/graph.hpp"
#include "flowgen/qcfg.hpp"
#include "flowgen/registry.hpp"
#include "flowgen/rules.hpp"

namespace flowgen {

/// Rules plus the registry their bodies call into. Immutable.
class Transducer {
 public:
  Transducer(RuleSet rules, std::shared_ptr<const FunctionRegistry> registry);

  /// Parses and statically checks `text` against `registry`.
  static Transducer from_text(std::string_view text,
                              std::shared_ptr<const FunctionRegistry> registry);

  const RuleSet& rules() const { return rules_; }
  const FunctionRegistry& registry() const { return *registry_; }
  const std::string& start() const { return rules_.start; }

 private:
  RuleSet rules_;
  std::shared_ptr<const FunctionRegistry> registry_;
};

struct TransduceOptions {
  std::size_t max_depth = 64;
  bool builtin_lex = true;
};

struct TransduceResult {
  DataflowGraph graph;  // host graph plus nodes added by rule bodies
  Qcfg grammar;
};

/// Applies one rule at `node`. Returns nothing when the pattern or a guard
/// fails; on success the rule's lets are committed to `graph`. Let nodes are
/// shared: a call whose op and arguments match an existing node reuses it.
std::optional<QcfgProduction> apply_rule(const TransductionRule& rule, DataflowGraph& graph,
                                         const NodeId& node, const FunctionRegistry& registry,
                                         ExecContext& ctx);

/// Built-in LEX productions for a primitive value: words for small integers,
/// relative day names around `now`, clock times and so on.
std::vector<std::vector<std::string>> lexicalize(const Value& value, const DateTime& now);

/// Expands (start, root) breadth-first, applying every rule whose head matches
/// each reachable nonterminal exactly once. Throws CoverageError naming every
/// reachable nonterminal with no production, and DepthExceeded when expansion
/// goes deeper than `options.max_depth`.
TransduceResult transduce(const Transducer& transducer, const DataflowGraph& graph,
                          ExecContext& ctx, const TransduceOptions& options = {});

}  // namespace flowgen
