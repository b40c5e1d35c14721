#include "flowgen/registry.hpp"

#include <set>

#include "flowgen/errors.hpp"

namespace flowgen {
namespace {

const std::set<std::string>& literal_ops() {
  static const std::set<std::string> ops = {"Number", "Integer", "Text", "Boolean",
                                            "Date",   "Time",    "DateTime"};
  return ops;
}

// Arranges argument values in parameter order, honouring named arguments.
std::vector<Value> bind_arguments(const Node& node, const FunctionSpec& spec,
                                  const DataflowGraph& graph) {
  if (node.args.size() != spec.params.size())
    throw ArityMismatch(spec.name + " expects " + std::to_string(spec.params.size()) +
                        " arguments, got " + std::to_string(node.args.size()));
  std::vector<std::optional<Value>> slots(spec.params.size());
  std::size_t next_positional = 0;
  for (const auto& arg : node.args) {
    std::size_t pos = 0;
    if (arg.name.empty()) {
      while (next_positional < slots.size() && slots[next_positional]) ++next_positional;
      pos = next_positional;
    } else {
      pos = spec.params.size();
      for (std::size_t i = 0; i < spec.params.size(); ++i)
        if (spec.params[i].name == arg.name) pos = i;
      if (pos == spec.params.size())
        throw ArityMismatch(spec.name + " has no parameter named '" + arg.name + "'");
    }
    if (pos >= slots.size() || slots[pos])
      throw ArityMismatch("argument '" + arg.name + "' bound twice in " + spec.name);
    slots[pos] = graph.value(arg.node);
  }
  std::vector<Value> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

void evaluate_node(DataflowGraph& graph, Node& node, const FunctionRegistry& registry,
                   ExecContext& ctx) {
  if (node.value) return;
  try {
    const FunctionSpec& spec = registry.at(node.op);
    auto args = bind_arguments(node, spec, graph);
    node.value = registry.call(node.op, args, ctx);
  } catch (const ExecutionError&) {
    throw;
  } catch (const std::exception& e) {
    throw ExecutionError(node.id.str(), e.what());
  }
}

}  // namespace

bool TypeSpec::accepts(const Value& v) const {
  if (any_) return true;
  if (tag_ == ValueTag::Number && v.tag() == ValueTag::Integer) return true;
  if (v.tag() != tag_) return false;
  return record_.empty() || v.as_record().type == record_;
}

std::string TypeSpec::describe() const {
  if (any_) return "Any";
  return record_.empty() ? std::string(tag_name(tag_)) : record_;
}

void FunctionRegistry::add(FunctionSpec spec) {
  if (is_literal_op(spec.name)) throw Error("function name '" + spec.name + "' is reserved");
  std::string name = spec.name;
  if (!functions_.emplace(name, std::move(spec)).second)
    throw Error("function '" + name + "' registered twice");
}

const FunctionSpec* FunctionRegistry::find(const std::string& name) const {
  auto it = functions_.find(name);
  return it == functions_.end() ? nullptr : &it->second;
}

const FunctionSpec& FunctionRegistry::at(const std::string& name) const {
  if (const FunctionSpec* f = find(name)) return *f;
  throw UnknownFunction(name);
}

std::vector<std::string> FunctionRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : functions_) out.push_back(k);
  return out;
}

Value FunctionRegistry::call(const std::string& name, std::span<const Value> args,
                             ExecContext& ctx) const {
  const FunctionSpec& spec = at(name);
  if (args.size() != spec.params.size())
    throw ArityMismatch(name + " expects " + std::to_string(spec.params.size()) +
                        " arguments, got " + std::to_string(args.size()));
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (!spec.params[i].type.accepts(args[i]))
      throw TypeMismatch(name + ": parameter '" + spec.params[i].name + "' expects " +
                         spec.params[i].type.describe() + ", got " + args[i].kind());
  }
  Value out = spec.impl(args, ctx);
  if (!spec.result.accepts(out))
    throw TypeMismatch(name + " returned " + out.kind() + ", declared " +
                       spec.result.describe());
  return out;
}

bool is_literal_op(const std::string& op) { return literal_ops().count(op) != 0; }

void validate_ops(const DataflowGraph& graph, const FunctionRegistry& registry) {
  for (const auto& n : graph.nodes())
    if (!n.literal && !registry.contains(n.op)) throw UnknownFunction(n.op);
}

DataflowGraph execute(const DataflowGraph& graph, const FunctionRegistry& registry,
                      ExecContext& ctx) {
  validate_ops(graph, registry);
  DataflowGraph out = graph;
  for (const auto& n : graph.nodes()) evaluate_node(out, out.mutable_node(n.id), registry, ctx);
  return out;
}

NodeId add_node(DataflowGraph& graph, const std::string& op, const std::vector<NodeId>& args,
                const FunctionRegistry& registry, ExecContext& ctx) {
  const FunctionSpec& spec = registry.at(op);
  if (spec.params.size() != args.size())
    throw ArityMismatch(op + " expects " + std::to_string(spec.params.size()) +
                        " arguments, got " + std::to_string(args.size()));
  Node node;
  node.id = graph.fresh_id();
  node.op = op;
  for (const auto& a : args) node.args.push_back(Argument{a, {}});
  const bool eager = graph.executed();
  if (eager) {
    // Evaluate before inserting so a failing function leaves the graph untouched.
    std::vector<Value> values;
    for (const auto& a : args) values.push_back(graph.value(a));
    try {
      node.value = registry.call(op, values, ctx);
    } catch (const std::exception& e) {
      throw ExecutionError(node.id.str(), e.what());
    }
  }
  return graph.insert(std::move(node)).id;
}

NodeId add_literal(DataflowGraph& graph, Value value) {
  static const char* kOps[] = {"Null", "Boolean", "Integer", "Number", "Text",
                               "Date", "Time",    "DateTime"};
  if (value.tag() == ValueTag::List || value.tag() == ValueTag::Record ||
      value.tag() == ValueTag::Null)
    throw TypeMismatch("literal nodes hold primitive values only");
  Node node;
  node.id = graph.fresh_id();
  node.op = kOps[static_cast<int>(value.tag())];
  node.literal = true;
  node.value = std::move(value);
  return graph.insert(std::move(node)).id;
}

std::string render_result_json(const DataflowGraph& graph) {
  if (graph.root().empty()) throw Error("graph has no root");
  const Node& root = graph.node(graph.root());
  if (!root.value) throw Error("cannot render the result of an unexecuted graph");
  return to_json(*root.value).dump();
}

}  // namespace flowgen
