#include "flowgen/graph.hpp"

#include <charconv>
#include <map>

#include "flowgen/errors.hpp"

namespace flowgen {
namespace {

// Numeric suffix of ids shaped "v<digits>".
std::optional<std::size_t> v_index(const std::string& id) {
  if (id.size() < 2 || id[0] != 'v') return std::nullopt;
  std::size_t out = 0;
  auto res = std::from_chars(id.data() + 1, id.data() + id.size(), out);
  if (res.ec != std::errc() || res.ptr != id.data() + id.size()) return std::nullopt;
  return out;
}

}  // namespace

std::vector<NodeId> Node::arg_ids() const {
  std::vector<NodeId> out;
  out.reserve(args.size());
  for (const auto& a : args) out.push_back(a.node);
  return out;
}

const Node& DataflowGraph::insert(Node node) {
  if (node.id.empty()) throw Error("node id must not be empty");
  if (contains(node.id)) throw Error("duplicate node id " + node.id.str());
  for (const auto& a : node.args) {
    if (!contains(a.node))
      throw Error("node " + node.id.str() + " refers to unknown node " + a.node.str());
  }
  if (node.literal && (!node.args.empty() || !node.value))
    throw Error("literal node " + node.id.str() + " must have a value and no args");
  if (auto idx = v_index(node.id.str())) next_index_ = std::max(next_index_, *idx + 1);
  index_.emplace(node.id.str(), nodes_.size());
  nodes_.push_back(std::move(node));
  return nodes_.back();
}

NodeId DataflowGraph::fresh_id() const { return NodeId("v" + std::to_string(next_index_)); }

const Node& DataflowGraph::node(const NodeId& id) const {
  auto it = index_.find(id.str());
  if (it == index_.end()) throw Error("unknown node " + id.str());
  return nodes_[it->second];
}

Node& DataflowGraph::mutable_node(const NodeId& id) {
  auto it = index_.find(id.str());
  if (it == index_.end()) throw Error("unknown node " + id.str());
  return nodes_[it->second];
}

const Value& DataflowGraph::value(const NodeId& id) const {
  const Node& n = node(id);
  if (!n.value) throw Error("node " + id.str() + " has not been executed");
  return *n.value;
}

void DataflowGraph::set_root(const NodeId& id) {
  if (!contains(id)) throw Error("root " + id.str() + " is not a node of the graph");
  root_ = id;
}

bool DataflowGraph::executed() const {
  for (const auto& n : nodes_)
    if (!n.value) return false;
  return !nodes_.empty();
}

std::vector<NodeId> DataflowGraph::reachable() const {
  std::vector<bool> seen(nodes_.size(), false);
  if (root_.empty()) return {};
  std::vector<std::size_t> stack{index_.at(root_.str())};
  while (!stack.empty()) {
    std::size_t i = stack.back();
    stack.pop_back();
    if (seen[i]) continue;
    seen[i] = true;
    for (const auto& a : nodes_[i].args) stack.push_back(index_.at(a.node.str()));
  }
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (seen[i]) out.push_back(nodes_[i].id);
  return out;
}

bool isomorphic(const DataflowGraph& a, const DataflowGraph& b) {
  if (a.root().empty() || b.root().empty()) return a.root().empty() == b.root().empty();
  // Node correspondence must be a bijection so that sharing is preserved.
  std::map<std::string, std::string> a_to_b, b_to_a;
  std::function<bool(const NodeId&, const NodeId&)> match = [&](const NodeId& x,
                                                               const NodeId& y) {
    auto ia = a_to_b.find(x.str());
    auto ib = b_to_a.find(y.str());
    if (ia != a_to_b.end() || ib != b_to_a.end())
      return ia != a_to_b.end() && ib != b_to_a.end() && ia->second == y.str() &&
             ib->second == x.str();
    const Node& nx = a.node(x);
    const Node& ny = b.node(y);
    if (nx.op != ny.op || nx.literal != ny.literal || nx.args.size() != ny.args.size())
      return false;
    if (nx.literal && !(nx.value == ny.value)) return false;
    a_to_b[x.str()] = y.str();
    b_to_a[y.str()] = x.str();
    for (std::size_t i = 0; i < nx.args.size(); ++i) {
      if (nx.args[i].name != ny.args[i].name) return false;
      if (!match(nx.args[i].node, ny.args[i].node)) return false;
    }
    return true;
  };
  return match(a.root(), b.root());
}

}  // namespace flowgen
