#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "autoscore/domain.hpp"

namespace autoscore {

// Gold-labeled responses grouped by task, in ingestion order.
class ResponsePool {
 public:
  // Throws DuplicateResponseId.
  void add(const std::string& task_id, GoldLabeledResponse item);

  bool has_task(std::string_view task_id) const;
  const std::vector<GoldLabeledResponse>& responses(std::string_view task_id) const;
  std::vector<std::string> task_ids() const;
  std::size_t size() const noexcept;

 private:
  std::map<std::string, std::vector<GoldLabeledResponse>, std::less<>> by_task_;
};

enum class PoolFormat { Jsonl, Csv };

std::optional<PoolFormat> parse_pool_format(std::string_view name) noexcept;
// From the file extension; JSONL unless it ends in ".csv".
PoolFormat guess_pool_format(const std::filesystem::path& path) noexcept;

// Required fields/columns: task_id, response_id, text, gold_label. When
// `tasks` is given, gold labels of known tasks are checked against the
// task scale. Throws ParseError (with line number), UnknownLabel,
// DuplicateResponseId.
ResponsePool ingest(const std::filesystem::path& path, PoolFormat format,
                    const std::map<std::string, ScoringTask, std::less<>>* tasks = nullptr);
ResponsePool ingest_string(std::string_view contents, PoolFormat format,
                           const std::map<std::string, ScoringTask, std::less<>>* tasks = nullptr,
                           std::string_view source_name = "<memory>");

struct BalancedSampleSpec {
  std::size_t cap_per_label = 120;
  std::uint64_t seed = 0;
};

// splitmix64(seed XOR fnv1a64(task_id))
std::uint64_t sample_seed(std::string_view task_id, std::uint64_t seed) noexcept;

// Deterministic generator for sampling: std::mt19937_64 seeded with
// sample_seed(). The engine's output is fixed by the standard; bounded
// draws use rejection sampling rather than std::uniform_int_distribution
// (whose algorithm is implementation-defined), so the drawn indices are
// identical on every platform.
class SampleRng {
 public:
  SampleRng(std::string_view task_id, std::uint64_t seed);
  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

// For every allowed label (rank order) draws min(cap, available) responses
// without replacement. Candidates are ordered by response id before the
// draw so ingestion order does not matter. Labels with nothing available
// produce a warning, not an error.
std::vector<GoldLabeledResponse> balanced_sample(const ResponsePool& pool, const ScoringTask& task,
                                                 const BalancedSampleSpec& spec);

std::string sample_to_jsonl(const std::string& task_id, const std::vector<GoldLabeledResponse>& sample);

}  // namespace autoscore
