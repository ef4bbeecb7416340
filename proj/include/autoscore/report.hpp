#pragma once

#include <span>
#include <string>
#include <vector>

#include "autoscore/evaluation.hpp"

namespace autoscore {

// One (task, strategy, policy) cell of an experiment grid.
struct CellResult {
  std::string task_id;
  std::string strategy;
  std::string policy;
  MetricsReport metrics;
};

// Row/column order for rendering; normally the order of the run config.
struct GridLayout {
  std::vector<std::string> tasks;
  std::vector<std::string> strategies;
  std::vector<std::string> policies;
};

// Task x strategy accuracy for one policy, with an average row (mean and
// population SD), zero-/few-shot family rows and the family deltas.
std::string render_accuracy_table(std::span<const CellResult> cells, const GridLayout& layout,
                                  const std::string& policy);

// Per-task category accuracy rows plus kappa, one column per strategy.
std::string render_category_table(std::span<const CellResult> cells, const GridLayout& layout,
                                   const std::string& policy);

// Task x policy accuracy for one strategy.
std::string render_policy_table(std::span<const CellResult> cells, const GridLayout& layout,
                                const std::string& strategy);

// Every metric for every cell, with failure and substitution footers.
std::string render_full_metrics(std::span<const CellResult> cells, const GridLayout& layout);

std::string metrics_csv(std::span<const CellResult> cells, const GridLayout& layout);

}  // namespace autoscore
