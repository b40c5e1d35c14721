#include "flowgen/pipeline.hpp"

#include "flowgen/errors.hpp"
#include "flowgen/tokenizer.hpp"

namespace flowgen {
namespace {

// FNV-1a, so per-example seeds do not depend on the standard library's hash.
std::uint64_t id_hash(const std::string& id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : id) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

}  // namespace

ExecContext Pipeline::fresh_context() const {
  return ExecContext{now, std::make_shared<Calendar>(calendar)};
}

DecodeResult Pipeline::run(const Example& example, const LmProvider& lm, DecodeMode mode,
                           const DecodeConfig& config) const {
  ExecContext ctx = fresh_context();
  DecodeConfig cfg = config;
  if (!example.id.empty()) cfg.seed = config.seed ^ id_hash(example.id);
  return generate(GenerateInput{example.graph, example.utterance}, *registry, transducer.get(), lm,
                  mode, cfg, prompt, ctx);
}

std::vector<DecodeResult> Pipeline::run_all(const std::vector<Example>& examples,
                                            const LmProvider& lm, DecodeMode mode,
                                            const DecodeConfig& config) const {
  std::vector<DecodeResult> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(run(ex, lm, mode, config));
  return out;
}

std::vector<NgramExample> Pipeline::lm_corpus(const std::vector<Example>& examples) const {
  std::vector<NgramExample> out;
  for (const auto& ex : examples) {
    ExecContext ctx = fresh_context();
    const DataflowGraph g = execute(ex.graph, *registry, ctx);
    out.push_back(NgramExample{pretokenize(build_prompt(g, prompt, ex.utterance)),
                               split_words(ex.gold)});
  }
  return out;
}

std::vector<RankedExample> ranked(const std::vector<Example>& examples,
                                  const std::vector<DecodeResult>& results) {
  if (examples.size() != results.size()) throw AlignmentError("one result per example expected");
  std::vector<RankedExample> out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    RankedExample r{examples[i].id, examples[i].gold, {}};
    for (const auto& c : results[i].candidates) r.candidates.push_back(c.text);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace flowgen
