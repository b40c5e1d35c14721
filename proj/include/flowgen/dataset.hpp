#pragma once

#include <string>
#include <vector>

#include "flowgen/decoder.hpp"
#include "flowgen/eval.hpp"
#include "flowgen/graph.hpp"

namespace flowgen {

class FunctionRegistry;

/// One JSONL line: {"id", "graph", "utterance", "gold"}. "graph" is either a
/// path relative to the dataset file or, when it starts with '(', the
/// s-expression itself.
struct Example {
  std::string id;
  DataflowGraph graph;
  std::string utterance;
  std::string gold;
};

std::vector<Example> load_dataset(const std::string& path, const FunctionRegistry& registry);

struct Prediction {
  std::string id;
  std::vector<std::pair<std::string, double>> candidates;  // text, score
  std::size_t grammar_size = 0;
};

/// {"id", "candidates": [{"text", "score"}], "grammar_size"} on one line.
std::string prediction_line(const std::string& id, const DecodeResult& result);

std::vector<Prediction> load_predictions(const std::string& path);

/// Pairs predictions with gold by id. Missing, extra or duplicate ids throw
/// AlignmentError.
std::vector<RankedExample> align(const std::vector<Example>& dataset,
                                 const std::vector<Prediction>& predictions);

}  // namespace flowgen
