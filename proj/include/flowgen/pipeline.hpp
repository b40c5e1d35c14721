#pragma once

#include <memory>
#include <string>
#include <vector>

#include "flowgen/calendar.hpp"
#include "flowgen/dataset.hpp"
#include "flowgen/decoder.hpp"
#include "flowgen/lm.hpp"

namespace flowgen {

/// Shared inputs for running many examples. Each example executes against
/// its own copy of `calendar`, so createEvent in one cannot leak into the next.
struct Pipeline {
  std::shared_ptr<const FunctionRegistry> registry;
  std::shared_ptr<const Transducer> transducer;  // may be null for unconstrained
  Calendar calendar;
  DateTime now;
  PromptFlags prompt;

  ExecContext fresh_context() const;

  /// Sample mode seeds each example with config.seed mixed with its id, so
  /// draws are independent across a dataset.
  DecodeResult run(const Example& example, const LmProvider& lm, DecodeMode mode,
                   const DecodeConfig& config) const;

  /// One result per example, in input order.
  std::vector<DecodeResult> run_all(const std::vector<Example>& examples, const LmProvider& lm,
                                    DecodeMode mode, const DecodeConfig& config) const;

  /// (prompt pieces, gold words) pairs for n-gram training.
  std::vector<NgramExample> lm_corpus(const std::vector<Example>& examples) const;
};

std::vector<RankedExample> ranked(const std::vector<Example>& examples,
                                  const std::vector<DecodeResult>& results);

}  // namespace flowgen
