// flowgen: transduce | generate | sample | evaluate | train-lm
//
// Exit codes: 0 ok, 1 other, 2 usage, 3 syntax, 4 coverage, 5 execution,
// 6 decoding, 7 LM or remote, 8 data alignment, 9 depth limit.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "flowgen/calendar.hpp"
#include "flowgen/dataset.hpp"
#include "flowgen/decoder.hpp"
#include "flowgen/errors.hpp"
#include "flowgen/eval.hpp"
#include "flowgen/pipeline.hpp"
#include "flowgen/remote_lm.hpp"
#include "flowgen/sexpr.hpp"
#include "json.hpp"

using namespace flowgen;

namespace {

struct UsageError : Error {
  using Error::Error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + out_path);
  out << text;
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return 2;
  if (dynamic_cast<const SyntaxError*>(&e) || dynamic_cast<const RuleError*>(&e) ||
      dynamic_cast<const UnknownFunction*>(&e) || dynamic_cast<const ArityMismatch*>(&e))
    return 3;
  if (dynamic_cast<const CoverageError*>(&e)) return 4;
  if (dynamic_cast<const ExecutionError*>(&e) || dynamic_cast<const TypeMismatch*>(&e)) return 5;
  if (dynamic_cast<const EmptyLanguage*>(&e) || dynamic_cast<const NoCompletion*>(&e) ||
      dynamic_cast<const InvalidGrammar*>(&e))
    return 6;
  if (dynamic_cast<const RemoteError*>(&e) || dynamic_cast<const OutOfVocabulary*>(&e) ||
      dynamic_cast<const UnknownToken*>(&e) || dynamic_cast<const IllegalToken*>(&e))
    return 7;
  if (dynamic_cast<const AlignmentError*>(&e)) return 8;
  if (dynamic_cast<const DepthExceeded*>(&e)) return 9;
  return 1;
}

struct Opts {
  std::string graph, rules, dataset, lm = "uniform", vocab, mode = "constrained", now, calendar,
      prompt_parts = "computation,result", out, search = "exact", utterance, predictions;
  std::size_t beam = 5, max_len = 64, max_depth = 64, order = 8;
  std::optional<std::uint64_t> seed;
  double length_norm = 0.0, k = 0.1;
  std::vector<std::size_t> ks{1, 5};
};

DateTime parse_now(const std::string& text) {
  if (text.empty()) throw UsageError("--now is required when graphs are executed");
  try {
    return DateTime::parse(text);
  } catch (const std::exception& e) {
    throw UsageError("bad --now '" + text + "': " + e.what());
  }
}

PromptFlags parse_prompt(const std::string& text) {
  try {
    return PromptFlags::parse(text);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

Pipeline make_pipeline(const Opts& o, bool need_rules) {
  Pipeline p;
  p.registry = std::make_shared<FunctionRegistry>(calendar_registry());
  if (!o.rules.empty())
    p.transducer = std::make_shared<Transducer>(Transducer::from_text(slurp(o.rules), p.registry));
  else if (need_rules)
    throw UsageError("--rules is required");
  if (!o.calendar.empty()) p.calendar = Calendar::from_json(slurp(o.calendar));
  p.now = parse_now(o.now);
  p.prompt = parse_prompt(o.prompt_parts);
  return p;
}

void add_exec_flags(CLI::App* c, Opts& o) {
  c->add_option("--now", o.now, "Reference time, ISO-8601 (required)");
  c->add_option("--calendar", o.calendar, "Calendar fixture JSON");
  c->add_option("--max-depth", o.max_depth, "Transduction depth limit");
}

void add_decode_flags(CLI::App* c, Opts& o, bool with_mode) {
  c->add_option("--graph", o.graph, "Graph s-expression file");
  c->add_option("--dataset", o.dataset, "Dataset JSONL; one prediction line per example");
  c->add_option("--utterance", o.utterance, "User utterance for --graph");
  c->add_option("--rules", o.rules, "Transduction rule file");
  c->add_option("--lm", o.lm, "uniform | ngram:PATH | remote:URL");
  c->add_option("--vocab", o.vocab, "Vocabulary file for a remote LM");
  if (with_mode) c->add_option("--mode", o.mode, "constrained | unconstrained | sample");
  c->add_option("--beam", o.beam, "Number of candidates K");
  c->add_option("--max-len", o.max_len, "Maximum response length in tokens");
  c->add_option("--seed", o.seed, "Sampling seed");
  c->add_option("--prompt-parts", o.prompt_parts, "Subset of utterance,computation,result or none");
  c->add_option("--search", o.search, "exact | beam (constrained mode)");
  c->add_option("--length-norm", o.length_norm, "Length normalization exponent");
  c->add_option("--out", o.out, "Output path (default stdout)");
  add_exec_flags(c, o);
}

std::string cmd_transduce(const Opts& o) {
  if (o.graph.empty()) throw UsageError("--graph is required");
  Pipeline p = make_pipeline(o, true);
  ExecContext ctx = p.fresh_context();
  const DataflowGraph g = execute(parse_graph(slurp(o.graph), p.registry.get()), *p.registry, ctx);
  TransduceOptions topts;
  topts.max_depth = o.max_depth;
  return transduce(*p.transducer, g, ctx, topts).grammar.dump();
}

std::string cmd_generate(const Opts& o, DecodeMode mode) {
  if (o.graph.empty() == o.dataset.empty()) throw UsageError("give exactly one of --graph, --dataset");
  if (mode == DecodeMode::Sample && !o.seed) throw UsageError("sample mode requires --seed");
  Pipeline p = make_pipeline(o, mode != DecodeMode::Unconstrained);
  DecodeConfig cfg;
  cfg.beam = o.beam;
  cfg.max_len = o.max_len;
  cfg.max_depth = o.max_depth;
  cfg.length_norm = o.length_norm;
  cfg.seed = o.seed.value_or(0);
  try {
    cfg.search = parse_search(o.search);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  auto lm = make_provider(o.lm, o.vocab);

  std::string out;
  if (!o.graph.empty()) {
    Example ex{"", parse_graph(slurp(o.graph), p.registry.get()), o.utterance, ""};
    const DecodeResult r = p.run(ex, *lm, mode, cfg);
    for (std::size_t i = 0; i < r.candidates.size(); ++i) {
      nlohmann::ordered_json j;
      j["rank"] = i + 1;
      j["text"] = r.candidates[i].text;
      j["score"] = r.candidates[i].score;
      if (mode == DecodeMode::Constrained) j["grammar_size"] = r.diagnostics.grammar_size;
      out += j.dump() + "\n";
    }
    return out;
  }
  const auto examples = load_dataset(o.dataset, *p.registry);
  for (const auto& ex : examples) out += prediction_line(ex.id, p.run(ex, *lm, mode, cfg)) + "\n";
  return out;
}

std::string cmd_evaluate(const Opts& o) {
  if (o.dataset.empty() || o.predictions.empty())
    throw UsageError("--dataset and --predictions are required");
  const auto examples = load_dataset(o.dataset, calendar_registry());
  const auto preds = load_predictions(o.predictions);
  return evaluate(align(examples, preds), o.ks).dump(2) + "\n";
}

std::string cmd_train_lm(const Opts& o) {
  if (o.dataset.empty()) throw UsageError("--dataset is required");
  if (o.out.empty()) throw UsageError("--out is required");
  Pipeline p = make_pipeline(o, false);
  const auto examples = load_dataset(o.dataset, *p.registry);
  NgramModel::train(p.lm_corpus(examples), o.order, o.k).save(o.out);
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grammar-constrained response generation over dataflow graphs"};
  app.require_subcommand(1);
  Opts o;

  auto* transduce_cmd = app.add_subcommand("transduce", "Print the QCFG for one graph");
  transduce_cmd->add_option("--graph", o.graph, "Graph s-expression file");
  transduce_cmd->add_option("--rules", o.rules, "Transduction rule file");
  transduce_cmd->add_option("--out", o.out, "Output path (default stdout)");
  add_exec_flags(transduce_cmd, o);

  auto* generate_cmd = app.add_subcommand("generate", "Rank responses for a graph or dataset");
  add_decode_flags(generate_cmd, o, true);

  auto* sample_cmd = app.add_subcommand("sample", "Sample responses uniformly from the grammar");
  add_decode_flags(sample_cmd, o, false);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions against a dataset");
  evaluate_cmd->add_option("--dataset", o.dataset, "Dataset JSONL");
  evaluate_cmd->add_option("--predictions", o.predictions, "Prediction JSONL");
  evaluate_cmd->add_option("--k", o.ks, "Cutoffs for R@k")->delimiter(',');
  evaluate_cmd->add_option("--out", o.out, "Output path (default stdout)");

  auto* train_cmd = app.add_subcommand("train-lm", "Train an n-gram model on a dataset");
  train_cmd->add_option("--dataset", o.dataset, "Training dataset JSONL");
  train_cmd->add_option("--order", o.order, "N-gram order");
  train_cmd->add_option("--k", o.k, "Add-k smoothing constant");
  train_cmd->add_option("--prompt-parts", o.prompt_parts, "Prompt parts used as context");
  train_cmd->add_option("--out", o.out, "Model output path");
  add_exec_flags(train_cmd, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    std::string text;
    if (*transduce_cmd) {
      text = cmd_transduce(o);
    } else if (*generate_cmd) {
      DecodeMode mode;
      try {
        mode = parse_mode(o.mode);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      text = cmd_generate(o, mode);
    } else if (*sample_cmd) {
      text = cmd_generate(o, DecodeMode::Sample);
    } else if (*evaluate_cmd) {
      text = cmd_evaluate(o);
    } else {
      cmd_train_lm(o);
      return 0;
    }
    emit(o.out, text);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "flowgen: " << e.what() << "\n";
    return exit_code(e);
  }
}
