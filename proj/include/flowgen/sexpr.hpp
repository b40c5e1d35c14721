#pragma once

#include <string>
#include <string_view>

#include "flowgen/graph.hpp"

namespace flowgen {

class FunctionRegistry;

/// Parses a computation written as an S-expression:
///
///   expr    := "(" head arg* ")" | "@" id
///   head    := name [ "@" id ]
///   arg     := expr | ":" name expr
///   literal := "(" Number|Integer|Text|Boolean|Date|Time|DateTime token ")"
///
/// Ids are assigned in pre-order (v0, v1, ...) unless given explicitly with
/// `name@id`; `@id` refers back to a node defined earlier in the text, which
/// is how shared subcomputations are written. When `registry` is non-null
/// unknown function names are rejected.
DataflowGraph parse_graph(std::string_view text, const FunctionRegistry* registry = nullptr);

/// Inverse of parse_graph for the computation reachable from the root.
/// Shared nodes are written once with an explicit id and referenced after.
std::string serialize_graph(const DataflowGraph& graph);

}  // namespace flowgen
