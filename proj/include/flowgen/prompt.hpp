#pragma once

#include <string>
#include <string_view>

#include "flowgen/graph.hpp"

namespace flowgen {

/// Which parts go into the LM prompt. Enabled parts appear in the order
/// utterance, computation, result, each followed by a "<SEP>" line.
struct PromptFlags {
  bool utterance = false;
  bool computation = true;
  bool result = true;

  /// Comma-separated subset of utterance,computation,result; "none" for an
  /// empty prompt.
  static PromptFlags parse(std::string_view parts);
  std::string str() const;
};

/// Throws when the result is requested for an unexecuted graph.
std::string build_prompt(const DataflowGraph& graph, const PromptFlags& flags,
                         std::string_view utterance = {});

}  // namespace flowgen
