#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "flowgen/graph.hpp"
#include "flowgen/value.hpp"

namespace flowgen {

struct Calendar;

/// Everything a domain function may observe besides its arguments. `now` is
/// always explicit so that date-relative functions are reproducible.
struct ExecContext {
  DateTime now;
  std::shared_ptr<Calendar> calendar;
};

/// Static type of a parameter or result.
class TypeSpec {
 public:
  static TypeSpec any() { return TypeSpec(); }
  static TypeSpec of(ValueTag tag) { return TypeSpec(tag, {}); }
  static TypeSpec record(std::string type) { return TypeSpec(ValueTag::Record, std::move(type)); }

  bool accepts(const Value& v) const;
  std::string describe() const;

 private:
  TypeSpec() = default;
  TypeSpec(ValueTag tag, std::string record) : any_(false), tag_(tag), record_(std::move(record)) {}

  bool any_ = true;
  ValueTag tag_ = ValueTag::Null;
  std::string record_;
};

struct Parameter {
  std::string name;
  TypeSpec type;
};

using FunctionImpl = std::function<Value(std::span<const Value>, ExecContext&)>;

struct FunctionSpec {
  std::string name;
  std::vector<Parameter> params;
  TypeSpec result;
  FunctionImpl impl;
};

/// Name -> function table. Immutable once built; share freely.
class FunctionRegistry {
 public:
  void add(FunctionSpec spec);

  const FunctionSpec* find(const std::string& name) const;
  const FunctionSpec& at(const std::string& name) const;  // throws UnknownFunction
  bool contains(const std::string& name) const { return find(name) != nullptr; }
  std::vector<std::string> names() const;

  /// Type-checks arguments and result around the implementation.
  Value call(const std::string& name, std::span<const Value> args, ExecContext& ctx) const;

 private:
  std::map<std::string, FunctionSpec> functions_;
};

/// Literal marker ops understood by the graph format.
bool is_literal_op(const std::string& op);

/// Throws UnknownFunction for any non-literal op missing from the registry.
void validate_ops(const DataflowGraph& graph, const FunctionRegistry& registry);

/// Returns a copy of `graph` where every node carries a value. Nodes are
/// evaluated in topological order; failures are reported with the node id.
DataflowGraph execute(const DataflowGraph& graph, const FunctionRegistry& registry,
                      ExecContext& ctx);

/// Appends a node computing `op(args...)`. When the host graph is already
/// executed the new node is evaluated immediately.
NodeId add_node(DataflowGraph& graph, const std::string& op, const std::vector<NodeId>& args,
                const FunctionRegistry& registry, ExecContext& ctx);

/// Appends a literal node holding `value`.
NodeId add_literal(DataflowGraph& graph, Value value);

/// The root's value as canonical JSON.
std::string render_result_json(const DataflowGraph& graph);

}  // namespace flowgen
