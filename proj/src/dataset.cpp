#include "flowgen/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "flowgen/errors.hpp"
#include "flowgen/sexpr.hpp"
#include "json.hpp"

namespace flowgen {
namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw AlignmentError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename F>
void each_line(const std::string& path, F f) {
  std::ifstream in(path);
  if (!in) throw AlignmentError("cannot open " + path);
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      f(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw AlignmentError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace

std::vector<Example> load_dataset(const std::string& path, const FunctionRegistry& registry) {
  const auto dir = std::filesystem::path(path).parent_path();
  std::vector<Example> out;
  each_line(path, [&](const nlohmann::json& j) {
    Example ex;
    ex.id = j.at("id").get<std::string>();
    const auto g = j.at("graph").get<std::string>();
    const auto first = g.find_first_not_of(" \t\n");
    const std::string text = first != std::string::npos && g[first] == '(' ? g : slurp(dir / g);
    ex.graph = parse_graph(text, &registry);
    ex.utterance = j.value("utterance", "");
    ex.gold = j.at("gold").get<std::string>();
    out.push_back(std::move(ex));
  });
  return out;
}

std::string prediction_line(const std::string& id, const DecodeResult& result) {
  nlohmann::ordered_json j;
  j["id"] = id;
  auto cands = nlohmann::ordered_json::array();
  for (const auto& c : result.candidates) {
    nlohmann::ordered_json row;
    row["text"] = c.text;
    row["score"] = c.score;
    cands.push_back(std::move(row));
  }
  j["candidates"] = std::move(cands);
  j["grammar_size"] = result.diagnostics.grammar_size;
  return j.dump();
}

std::vector<Prediction> load_predictions(const std::string& path) {
  std::vector<Prediction> out;
  each_line(path, [&](const nlohmann::json& j) {
    Prediction p;
    p.id = j.at("id").get<std::string>();
    for (const auto& c : j.at("candidates"))
      p.candidates.emplace_back(c.at("text").get<std::string>(),
                                c.at("score").is_null() ? 0.0 : c.at("score").get<double>());
    p.grammar_size = j.value("grammar_size", std::size_t{0});
    out.push_back(std::move(p));
  });
  return out;
}

std::vector<RankedExample> align(const std::vector<Example>& dataset,
                                 const std::vector<Prediction>& predictions) {
  std::map<std::string, const Prediction*> by_id;
  for (const auto& p : predictions)
    if (!by_id.emplace(p.id, &p).second) throw AlignmentError("duplicate prediction id " + p.id);
  std::vector<RankedExample> out;
  std::set<std::string> seen;
  for (const auto& ex : dataset) {
    if (!seen.insert(ex.id).second) throw AlignmentError("duplicate dataset id " + ex.id);
    auto it = by_id.find(ex.id);
    if (it == by_id.end()) throw AlignmentError("no prediction for id " + ex.id);
    RankedExample r{ex.id, ex.gold, {}};
    for (const auto& c : it->second->candidates) r.candidates.push_back(c.first);
    out.push_back(std::move(r));
  }
  if (by_id.size() != dataset.size()) {
    for (const auto& [id, p] : by_id)
      if (!seen.count(id)) throw AlignmentError("prediction id " + id + " not in the dataset");
  }
  return out;
}

}  // namespace flowgen
