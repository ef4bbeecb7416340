#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "autoscore/dataset.hpp"
#include "autoscore/engine.hpp"
#include "autoscore/gateway.hpp"

namespace autoscore {

struct PolicyConfig {
  std::string name;
  ModelConfig model;
  ScoringPolicy policy;
};

struct GatewaySettings {
  GatewayMode mode = GatewayMode::ReplayStrict;
  std::filesystem::path transcripts;
  int max_attempts = 3;
  std::chrono::milliseconds backoff{500};
  std::optional<double> rate_per_second;
};

// One JSON document. Relative paths are resolved against the directory of
// the config file. Credentials never appear here, only the name of the
// environment variable that holds them.
struct ExperimentConfig {
  std::vector<std::string> tasks;
  std::filesystem::path task_dir;  // holds <task>.json
  std::filesystem::path prompt_registry;
  std::map<std::string, std::string, std::less<>> prompt_versions;  // task -> version, optional
  std::vector<std::string> strategies;
  std::vector<PolicyConfig> policies;
  std::filesystem::path dataset;
  PoolFormat dataset_format = PoolFormat::Jsonl;
  BalancedSampleSpec sample;
  GatewaySettings gateway;
  std::size_t parallelism = 4;
  std::filesystem::path output_dir;
  // Largest tolerated failed/sampled fraction in any cell.
  double failure_tolerance = 0.0;

  static ExperimentConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
  static ExperimentConfig load(const std::filesystem::path& path);
  // Snapshot with absolute paths, suitable for a manifest.
  nlohmann::json to_json() const;

  // Structural checks only; files are checked when the experiment is
  // prepared. Throws ConfigError.
  void validate() const;

  const PolicyConfig& policy(std::string_view name) const;
};

struct RunOverrides {
  std::optional<GatewayMode> mode;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::size_t> parallelism;

  void apply(ExperimentConfig& config) const;
};

}  // namespace autoscore
