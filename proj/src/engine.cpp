#include "autoscore/engine.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "autoscore/extraction.hpp"

namespace autoscore {

ScoringPolicy ScoringPolicy::single_call(SamplingConfig sampling) {
  ScoringPolicy p;
  p.kind = PolicyKind::SingleCall;
  p.sampling = sampling;
  p.n_calls = 1;
  p.tiebreak = sampling;
  return p;
}

ScoringPolicy ScoringPolicy::ensemble_vote(SamplingConfig sampling) {
  ScoringPolicy p;
  p.kind = PolicyKind::EnsembleVote;
  p.sampling = sampling;
  p.n_calls = 3;
  p.tiebreak = sampling;
  return p;
}

void ScoringPolicy::validate() const {
  sampling.validate();
  tiebreak.validate();
  const int expected = kind == PolicyKind::SingleCall ? 1 : 3;
  if (n_calls != expected) {
    throw Error(ErrorCode::ConfigError, "call count " + std::to_string(n_calls) + " does not match the " +
                                            (kind == PolicyKind::SingleCall ? "single-call" : "ensemble-vote") +
                                            " policy");
  }
}

std::optional<ProficiencyLabel> majority_vote(std::span<const ProficiencyLabel, 3> labels) noexcept {
  if (labels[0] == labels[1] || labels[0] == labels[2]) return labels[0];
  if (labels[1] == labels[2]) return labels[1];
  return std::nullopt;
}

namespace {

ProficiencyLabel call_and_extract(const ScoringContext& ctx, const MessageSequence& messages,
                                  const SamplingConfig& sampling, int call_index, ResponseScore& score) {
  ChatRequest request{ctx.model, sampling, messages, call_index};
  auto completion = ctx.gateway.complete(request, ctx.mode);
  score.transcripts.push_back(completion.cache_key);
  score.usage.prompt_tokens += completion.reply.usage.prompt_tokens;
  score.usage.completion_tokens += completion.reply.usage.completion_tokens;
  const auto label = extract_rating(completion.reply.text, ctx.task.scale).label;
  score.votes.push_back(label);
  return label;
}

}  // namespace

ResponseScore score_response(const ScoringContext& ctx, const StudentResponse& response) {
  ResponseScore score;
  score.response_id = response.id;
  const auto messages = assemble(ctx.strategy, ctx.task, ctx.components, response);
  try {
    if (ctx.policy.kind == PolicyKind::SingleCall) {
      score.predicted = call_and_extract(ctx, messages, ctx.policy.sampling, 1, score);
      return score;
    }
    std::array<ProficiencyLabel, 3> votes{};
    for (int i = 0; i < 3; ++i) {
      votes[static_cast<std::size_t>(i)] = call_and_extract(ctx, messages, ctx.policy.sampling, i + 1, score);
    }
    if (auto winner = majority_vote(votes)) {
      score.predicted = *winner;
      return score;
    }
    score.tiebreak_used = true;
    score.predicted = call_and_extract(ctx, messages, ctx.policy.tiebreak, 4, score);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CacheMiss || e.code() == ErrorCode::AuthError ||
        e.code() == ErrorCode::ConfigError) {
      throw;
    }
    score.predicted.reset();
    score.failure = FailureInfo{e.code(), e.what()};
  }
  return score;
}

std::vector<ResponseScore> score_all(const ScoringContext& ctx, std::span<const StudentResponse> responses,
                                     std::size_t parallelism) {
  std::vector<ResponseScore> results(responses.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    while (!abort.load()) {
      const auto i = next.fetch_add(1);
      if (i >= responses.size()) return;
      try {
        results[i] = score_response(ctx, responses[i]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        abort = true;
      }
    }
  };

  const auto workers = std::clamp<std::size_t>(parallelism, 1, std::max<std::size_t>(1, responses.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);

  std::sort(results.begin(), results.end(),
            [](const ResponseScore& a, const ResponseScore& b) { return a.response_id < b.response_id; });
  return results;
}

}  // namespace autoscore
