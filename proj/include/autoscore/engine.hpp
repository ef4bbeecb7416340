#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "autoscore/domain.hpp"
#include "autoscore/error.hpp"
#include "autoscore/gateway.hpp"
#include "autoscore/prompt.hpp"

namespace autoscore {

enum class PolicyKind { SingleCall, EnsembleVote };

struct ScoringPolicy {
  PolicyKind kind = PolicyKind::SingleCall;
  SamplingConfig sampling = sampling_preset(SamplingPreset::Greedy);
  int n_calls = 1;
  // Sampling for the extra call issued when three votes are pairwise distinct.
  SamplingConfig tiebreak = sampling_preset(SamplingPreset::Nucleus);

  static ScoringPolicy single_call(SamplingConfig sampling = sampling_preset(SamplingPreset::Greedy));
  static ScoringPolicy ensemble_vote(SamplingConfig sampling = sampling_preset(SamplingPreset::Nucleus));

  void validate() const;
};

// Label with at least two of three votes, or nullopt when all differ.
std::optional<ProficiencyLabel> majority_vote(std::span<const ProficiencyLabel, 3> labels) noexcept;

struct FailureInfo {
  ErrorCode code = ErrorCode::ScoringFailure;
  std::string message;
};

struct ResponseScore {
  std::string response_id;
  std::optional<ProficiencyLabel> predicted;  // empty on failure
  std::vector<ProficiencyLabel> votes;        // in call_index order
  bool tiebreak_used = false;
  std::vector<std::string> transcripts;  // cache keys, in call_index order
  TokenUsage usage;                      // summed over calls
  std::optional<FailureInfo> failure;    // set => excluded from metrics
};

struct ScoringContext {
  const ScoringTask& task;
  const Strategy& strategy;
  const ScoringPolicy& policy;
  const PromptComponentSet& components;
  const ModelConfig& model;
  Gateway& gateway;
  GatewayMode mode = GatewayMode::ReplayStrict;
};

// Calls are issued sequentially by call_index. Extraction and transport
// failures are captured in ResponseScore::failure together with whatever
// votes were collected. CacheMiss and AuthError propagate and abort the run.
ResponseScore score_response(const ScoringContext& context, const StudentResponse& response);

// Scores every response with up to `parallelism` workers and returns the
// results ordered by response id.
std::vector<ResponseScore> score_all(const ScoringContext& context,
                                     std::span<const StudentResponse> responses, std::size_t parallelism);

}  // namespace autoscore
