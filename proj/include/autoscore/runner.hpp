#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "autoscore/config.hpp"
#include "autoscore/registry.hpp"
#include "autoscore/report.hpp"

namespace autoscore {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitFailures = 3;
inline constexpr int kExitCacheMiss = 4;
inline constexpr int kExitOther = 1;

int exit_code_for(ErrorCode code) noexcept;

struct PreparedTask {
  ScoringTask task;
  std::string prompt_version;
  PromptStatus prompt_status = PromptStatus::Draft;
  PromptComponentSet components;
  std::vector<GoldLabeledResponse> sample;
};

struct PreparedExperiment {
  ExperimentConfig config;
  std::vector<PreparedTask> tasks;  // config order
};

// Loads one task definition from <task_dir>/<id>.json.
ScoringTask load_task_file(const ExperimentConfig& config, const std::string& task_id);

// Everything a run needs, checked before any model call: task files,
// prompt versions (Final and untampered for live/record runs), components,
// the dataset, samples, exemplar disjointness and every prompt of the grid.
// `check_credentials` also requires each policy's key variable to be set
// for live/record runs.
PreparedExperiment prepare(const ExperimentConfig& config, bool check_credentials = true);

struct RunResult {
  nlohmann::json manifest;
  std::vector<CellResult> cells;
  int exit_code = kExitOk;
  std::string summary;
};

// Runs the strategy x policy x task grid. Cells run one after another;
// responses inside a cell run on up to config.parallelism workers. Without
// an injected transport, HTTP is used. Writes under config.output_dir:
//   samples/<task>.jsonl
//   predictions/<policy>/<strategy>/<task>.jsonl
//   reports/{metrics.csv, accuracy_<policy>.txt, category_<policy>.txt,
//            policies_<strategy>.txt, full_metrics.txt}
//   manifest.json
RunResult run(const ExperimentConfig& config, std::shared_ptr<Transport> transport = nullptr);

// Rebuilds every report from the predictions files of a previous run.
std::vector<CellResult> write_reports(const ExperimentConfig& config);

// Writes the balanced sample of every configured task as JSONL under `dir`
// (or samples/ in the output directory) and returns the written paths.
std::vector<std::filesystem::path> write_samples(const ExperimentConfig& config,
                                                 const std::optional<std::filesystem::path>& dir = std::nullopt);

std::size_t count_calls(std::span<const ResponseScore> scores) noexcept;

struct CostRow {
  std::string model_id;
  std::string policy;
  std::size_t cells = 0;
  std::size_t responses = 0;
  std::size_t calls = 0;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

// Call and token totals per (model, policy), from the cell records of a
// run manifest.
std::vector<CostRow> cost_summary(const nlohmann::json& manifest);
std::string render_cost(std::span<const CostRow> rows);

struct ValidationOutcome {
  ValidationRecord record;
  MetricsReport metrics;
};

// Scores a held-out validation set with a Reviewed (or already Validated)
// prompt version and attaches the result to the registry entry. Status
// changes still need an explicit approval. Throws InvalidTransition for
// Draft/Final versions and OverlapError when the validation set meets the
// test sample or the few-shot exemplars.
ValidationOutcome validate_prompt(const ExperimentConfig& config, const std::string& version_id,
                                  const std::filesystem::path& validation_set, std::string strategy = {},
                                  std::string policy = {}, std::shared_ptr<Transport> transport = nullptr);

}  // namespace autoscore
