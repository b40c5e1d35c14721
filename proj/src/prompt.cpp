#include "flowgen/prompt.hpp"

#include "flowgen/errors.hpp"
#include "flowgen/qcfg.hpp"
#include "flowgen/registry.hpp"
#include "flowgen/sexpr.hpp"
#include "flowgen/tokenizer.hpp"

namespace flowgen {

PromptFlags PromptFlags::parse(std::string_view parts) {
  PromptFlags f{false, false, false};
  if (parts == "none") return f;
  std::size_t start = 0;
  while (start <= parts.size()) {
    auto comma = parts.find(',', start);
    auto item = parts.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                     : comma - start);
    if (item == "utterance")
      f.utterance = true;
    else if (item == "computation")
      f.computation = true;
    else if (item == "result")
      f.result = true;
    else
      throw Error("unknown prompt part '" + std::string(item) +
                  "', expected utterance, computation or result");
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return f;
}

std::string PromptFlags::str() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out.push_back(',');
    out += name;
  };
  add(utterance, "utterance");
  add(computation, "computation");
  add(result, "result");
  return out.empty() ? "none" : out;
}

std::string build_prompt(const DataflowGraph& graph, const PromptFlags& flags,
                         std::string_view utterance) {
  std::string out;
  auto part = [&](const std::string& text) {
    out += text;
    out += "\n";
    out += kSepToken;
    out += "\n";
  };
  if (flags.utterance) part(join_words(split_words(utterance)));
  if (flags.computation) part(serialize_graph(graph));
  if (flags.result) {
    if (graph.root().empty() || !graph.node(graph.root()).value)
      throw Error("the result part needs an executed graph");
    part(render_result_json(graph));
  }
  return out;
}

}  // namespace flowgen
