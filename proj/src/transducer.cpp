#include "flowgen/transducer.hpp"

#include <deque>
#include <map>
#include <set>

#include "flowgen/errors.hpp"

namespace flowgen {
namespace {

using Bindings = std::map<std::string, NodeId>;

bool match(const Pattern& p, const DataflowGraph& g, const NodeId& id, Bindings& out) {
  switch (p.kind) {
    case Pattern::Kind::Wildcard: return true;
    case Pattern::Kind::Capture: out[p.capture] = id; return true;
    case Pattern::Kind::Op: {
      const Node& n = g.node(id);
      if (n.op != p.op || n.args.size() != p.args.size()) return false;
      if (!p.capture.empty()) out[p.capture] = id;
      for (std::size_t i = 0; i < p.args.size(); ++i)
        if (!match(p.args[i], g, n.args[i].node, out)) return false;
      return true;
    }
  }
  return false;
}

Value eval(const RuleExpr& e, const DataflowGraph& g, const Bindings& b,
           const FunctionRegistry& reg, ExecContext& ctx) {
  switch (e.kind) {
    case RuleExpr::Kind::Literal: return e.literal;
    case RuleExpr::Kind::Var: return g.value(b.at(e.name));
    case RuleExpr::Kind::Call: {
      std::vector<Value> args;
      for (const auto& a : e.args) args.push_back(eval(a, g, b, reg, ctx));
      if (e.name == "kind") return Value(args.at(0).kind());
      return reg.call(e.name, args, ctx);
    }
  }
  return {};
}

bool holds(const Guard& guard, const DataflowGraph& g, const Bindings& b,
           const FunctionRegistry& reg, ExecContext& ctx) {
  const Value lhs = eval(guard.lhs, g, b, reg, ctx);
  if (!guard.op) {
    if (lhs.tag() != ValueTag::Boolean)
      throw TypeMismatch("guard must be Boolean, got " + lhs.kind());
    return lhs.as_bool();
  }
  const Value rhs = eval(guard.rhs, g, b, reg, ctx);
  if (*guard.op == CompareOp::Eq) return lhs == rhs || compare_values(lhs, rhs) == 0;
  if (*guard.op == CompareOp::Ne) return !(lhs == rhs || compare_values(lhs, rhs) == 0);
  const auto c = compare_values(lhs, rhs);
  switch (*guard.op) {
    case CompareOp::Lt: return c < 0;
    case CompareOp::Le: return c <= 0;
    case CompareOp::Gt: return c > 0;
    case CompareOp::Ge: return c >= 0;
    default: return false;
  }
}

std::optional<NodeId> find_call(const DataflowGraph& g, const std::string& op,
                                const std::vector<NodeId>& args) {
  for (const Node& n : g.nodes()) {
    if (n.literal || n.op != op || n.args.size() != args.size()) continue;
    bool same = true;
    for (std::size_t i = 0; i < args.size() && same; ++i)
      same = n.args[i].name.empty() && n.args[i].node == args[i];
    if (same) return n.id;
  }
  return std::nullopt;
}

std::optional<NodeId> find_literal(const DataflowGraph& g, const Value& v) {
  for (const Node& n : g.nodes())
    if (n.literal && n.value && *n.value == v) return n.id;
  return std::nullopt;
}

NodeId build(const RuleExpr& e, DataflowGraph& g, const Bindings& b,
             const FunctionRegistry& reg, ExecContext& ctx) {
  switch (e.kind) {
    case RuleExpr::Kind::Var: return b.at(e.name);
    case RuleExpr::Kind::Literal:
      if (auto id = find_literal(g, e.literal)) return *id;
      return add_literal(g, e.literal);
    case RuleExpr::Kind::Call: {
      std::vector<NodeId> args;
      for (const auto& a : e.args) args.push_back(build(a, g, b, reg, ctx));
      if (auto id = find_call(g, e.name, args)) return *id;
      return add_node(g, e.name, args, reg, ctx);
    }
  }
  throw Error("unreachable");
}

const char* kMonths[] = {"january", "february", "march",     "april",   "may",      "june",
                         "july",    "august",   "september", "october", "november", "december"};
const char* kSmall[] = {"zero", "one", "two",   "three",  "four", "five", "six",
                        "seven", "eight", "nine", "ten", "eleven", "twelve"};

std::vector<std::string> time_words(const Time& t) {
  const int h12 = t.hour % 12 == 0 ? 12 : t.hour % 12;
  std::string clock = std::to_string(h12);
  if (t.minute) clock += (t.minute < 10 ? ":0" : ":") + std::to_string(t.minute);
  return {clock, t.hour < 12 ? "am" : "pm"};
}

std::vector<std::string> date_words(const Date& d, const Date& today) {
  const auto delta = d.days() - today.days();
  if (delta == 0) return {"today"};
  if (delta == 1) return {"tomorrow"};
  if (delta == -1) return {"yesterday"};
  return {"on", kMonths[d.month - 1], std::to_string(d.day)};
}

std::string describe(const QcfgNonterminal& nt) { return nt.str(); }

}  // namespace

Transducer::Transducer(RuleSet rules, std::shared_ptr<const FunctionRegistry> registry)
    : rules_(std::move(rules)), registry_(std::move(registry)) {
  if (!registry_) throw Error("transducer needs a registry");
  auto declared = [&](const std::string& t) {
    for (const auto& n : rules_.nonterminals)
      if (n == t) return true;
    return false;
  };
  if (!declared(rules_.start)) throw RuleError("start type " + rules_.start + " is not declared");
  for (const auto& r : rules_.rules)
    if (!declared(r.head)) throw RuleError("rule " + r.name + " has undeclared head " + r.head);
}

Transducer Transducer::from_text(std::string_view text,
                                 std::shared_ptr<const FunctionRegistry> registry) {
  RuleSet rules = parse_rules(text, registry.get());
  return Transducer(std::move(rules), std::move(registry));
}

std::optional<QcfgProduction> apply_rule(const TransductionRule& rule, DataflowGraph& graph,
                                         const NodeId& node, const FunctionRegistry& registry,
                                         ExecContext& ctx) {
  Bindings b;
  if (!match(rule.pattern, graph, node, b)) return std::nullopt;
  b[std::string(kSelfVar)] = node;
  try {
    for (const auto& g : rule.guards)
      if (!holds(g, graph, b, registry, ctx)) return std::nullopt;
  } catch (const Error& e) {
    throw ExecutionError(node.str(), "guard of rule " + rule.name + ": " + e.what());
  }

  DataflowGraph scratch;
  DataflowGraph* target = &graph;
  if (!rule.lets.empty()) {
    scratch = graph;
    target = &scratch;
    try {
      for (const auto& let : rule.lets) b[let.var] = build(let.expr, scratch, b, registry, ctx);
    } catch (const Error& e) {
      throw ExecutionError(node.str(), "let in rule " + rule.name + ": " + e.what());
    }
  }

  QcfgProduction prod;
  prod.lhs = QcfgNonterminal{rule.head, node};
  for (const auto& item : rule.response) {
    if (auto* t = std::get_if<TemplateTerminal>(&item)) {
      prod.rhs.emplace_back(Terminal{t->word});
    } else if (auto* nt = std::get_if<TemplateNonterminal>(&item)) {
      prod.rhs.emplace_back(QcfgNonterminal{nt->type, b.at(nt->var)});
    } else {
      const auto& copy = std::get<TemplateValueCopy>(item);
      for (auto& w : split_words(render_text(target->value(b.at(copy.var)))))
        prod.rhs.emplace_back(Terminal{std::move(w)});
    }
  }
  if (prod.rhs.empty()) return std::nullopt;
  if (target == &scratch) graph = std::move(scratch);
  return prod;
}

std::vector<std::vector<std::string>> lexicalize(const Value& value, const DateTime& now) {
  std::vector<std::vector<std::string>> out;
  switch (value.tag()) {
    case ValueTag::Integer: {
      const auto n = value.as_int();
      if (n >= 1 && n <= 12) out.push_back({kSmall[n]});
      out.push_back({std::to_string(n)});
      break;
    }
    case ValueTag::Number: out.push_back({render_text(value)}); break;
    case ValueTag::Boolean: out.push_back({value.as_bool() ? "yes" : "no"}); break;
    case ValueTag::Text: {
      auto words = split_words(value.as_text());
      if (!words.empty()) out.push_back(std::move(words));
      break;
    }
    case ValueTag::Date: out.push_back(date_words(value.as_date(), now.date)); break;
    case ValueTag::Time: out.push_back(time_words(value.as_time())); break;
    case ValueTag::DateTime: {
      auto words = date_words(value.as_datetime().date, now.date);
      words.push_back("at");
      for (auto& w : time_words(value.as_datetime().time)) words.push_back(std::move(w));
      out.push_back(std::move(words));
      break;
    }
    default: break;
  }
  return out;
}

TransduceResult transduce(const Transducer& transducer, const DataflowGraph& graph,
                          ExecContext& ctx, const TransduceOptions& options) {
  if (!graph.executed()) throw Error("transduce needs an executed graph");
  DataflowGraph g = graph;
  const QcfgNonterminal start{transducer.start(), g.root()};

  std::set<QcfgNonterminal> seen{start};
  std::deque<std::pair<QcfgNonterminal, std::size_t>> work{{start, 0}};
  std::vector<QcfgProduction> prods;
  std::vector<std::string> uncovered;

  while (!work.empty()) {
    auto [nt, depth] = work.front();
    work.pop_front();
    std::vector<QcfgProduction> found;
    auto keep = [&](QcfgProduction p) {
      for (const auto& q : found)
        if (q == p) return;
      found.push_back(std::move(p));
    };
    for (const auto& rule : transducer.rules().rules) {
      if (rule.head != nt.type) continue;
      if (auto p = apply_rule(rule, g, nt.node, transducer.registry(), ctx)) keep(std::move(*p));
    }
    if (options.builtin_lex && nt.type == kLexType) {
      for (auto& words : lexicalize(g.value(nt.node), ctx.now)) {
        QcfgProduction p{nt, {}};
        for (auto& w : words) p.rhs.emplace_back(Terminal{std::move(w)});
        keep(std::move(p));
      }
    }
    if (found.empty()) uncovered.push_back(describe(nt));
    for (const auto& p : found) {
      for (const auto& s : p.rhs) {
        const auto* child = std::get_if<QcfgNonterminal>(&s);
        if (!child || !seen.insert(*child).second) continue;
        if (depth + 1 > options.max_depth)
          throw DepthExceeded("expansion of " + child->str() + " exceeds depth " +
                              std::to_string(options.max_depth));
        work.emplace_back(*child, depth + 1);
      }
    }
    prods.insert(prods.end(), std::make_move_iterator(found.begin()),
                 std::make_move_iterator(found.end()));
  }
  if (!uncovered.empty()) throw CoverageError(uncovered);
  return TransduceResult{std::move(g), Qcfg(start, std::move(prods))};
}

}  // namespace flowgen
