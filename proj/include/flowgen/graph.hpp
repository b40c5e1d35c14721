#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "flowgen/value.hpp"

namespace flowgen {

/// Stable node identifier, unique within a graph ("v0", "v1", ...).
class NodeId {
 public:
  NodeId() = default;
  explicit NodeId(std::string value) : value_(std::move(value)) {}

  const std::string& str() const { return value_; }
  bool empty() const { return value_.empty(); }

  auto operator<=>(const NodeId&) const = default;

 private:
  std::string value_;
};

struct Argument {
  NodeId node;
  std::string name;  // empty for positional arguments
};

struct Node {
  NodeId id;
  std::string op;         // function name, or the literal type for literals
  bool literal = false;   // literals have no args and a preset value
  std::vector<Argument> args;
  std::optional<Value> value;

  std::vector<NodeId> arg_ids() const;
};

/// A computation DAG. Nodes are stored in insertion order and every node's
/// arguments must already exist when it is inserted, so insertion order is a
/// topological order and the graph is acyclic by construction.
class DataflowGraph {
 public:
  DataflowGraph() = default;

  /// Inserts a fully formed node. Throws if the id is taken or an argument
  /// is missing.
  const Node& insert(Node node);

  /// Next id continuing the host graph's v-numbering.
  NodeId fresh_id() const;

  bool contains(const NodeId& id) const { return index_.count(id.str()) != 0; }
  const Node& node(const NodeId& id) const;
  Node& mutable_node(const NodeId& id);
  const Value& value(const NodeId& id) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  const NodeId& root() const { return root_; }
  void set_root(const NodeId& id);

  /// True when every node carries a value.
  bool executed() const;

  /// Ids reachable from the root, in topological order.
  std::vector<NodeId> reachable() const;

 private:
  std::vector<Node> nodes_;
  std::unordered_map<std::string, std::size_t> index_;
  NodeId root_;
  std::size_t next_index_ = 0;
};

/// Structural isomorphism of the computations rooted at each graph's root.
bool isomorphic(const DataflowGraph& a, const DataflowGraph& b);

}  // namespace flowgen

template <>
struct std::hash<flowgen::NodeId> {
  std::size_t operator()(const flowgen::NodeId& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
