#include <doctest.h>

#include <algorithm>
#include <array>
#include <map>
#include <mutex>

#include "autoscore/engine.hpp"
#include "autoscore/error.hpp"
#include "autoscore/registry.hpp"
#include "simulated_transport.hpp"

using namespace autoscore;

namespace {

const std::string kRoot = AUTOSCORE_SOURCE_DIR;

// Replies chosen per call index from a table keyed by response text.
class TableTransport final : public Transport {
 public:
  std::map<std::string, std::vector<std::string>> replies;
  std::mutex mutex;
  std::vector<std::pair<int, SamplingConfig>> log;

  ChatReply send(const ChatRequest& request) override {
    const auto text = testing::SimulatedTransport::student_response(request.messages.user());
    std::lock_guard lock(mutex);
    log.emplace_back(request.call_index, request.sampling);
    const auto& script = replies.at(text);
    ChatReply r;
    r.text = script.at(static_cast<std::size_t>(request.call_index - 1));
    if (r.text == "!transport") throw Error(ErrorCode::TransportError, "boom", false);
    r.usage = {100, 10};
    return r;
  }
};

struct Fixture {
  ScoringTask task = load_task(kRoot + "/data/tasks/H4_3.json");
  PromptComponentSet components = load_components(kRoot + "/data/prompts/H4_3/H4_3-v1");
  Strategy strategy = preset("ZS_CoT");
  ModelConfig model{"model-x"};
  std::shared_ptr<TableTransport> transport = std::make_shared<TableTransport>();
  Gateway gateway{transport, nullptr, RetryPolicy{1, std::chrono::milliseconds(0), 2.0}};

  ResponseScore score(const ScoringPolicy& policy, const std::string& text) {
    const ScoringContext ctx{task, strategy, policy, components, model, gateway, GatewayMode::Live};
    return score_response(ctx, {"r-" + text, text});
  }
};

std::string marker(ProficiencyLabel l) { return "Rating: [[" + std::string(label_name(l)) + "]]"; }

}  // namespace

TEST_CASE("majority vote over the trinomial vote space") {
  int majorities = 0;
  int ties = 0;
  for (auto a : kAllLabels) {
    for (auto b : kAllLabels) {
      for (auto c : kAllLabels) {
        const std::array<ProficiencyLabel, 3> v{a, b, c};
        const auto m = majority_vote(v);
        const bool expect_tie = a != b && b != c && a != c;
        CHECK(m.has_value() == !expect_tie);
        if (m) {
          ++majorities;
          CHECK(std::count(v.begin(), v.end(), *m) >= 2);
        } else {
          ++ties;
        }
        std::array<ProficiencyLabel, 3> p = v;
        std::sort(p.begin(), p.end());
        do {
          CHECK(majority_vote(p) == m);
        } while (std::next_permutation(p.begin(), p.end()));
      }
    }
  }
  CHECK(majorities == 21);
  CHECK(ties == 6);
}

TEST_CASE("binomial triples always have a majority") {
  const std::array<ProficiencyLabel, 2> labels{ProficiencyLabel::Beginning, ProficiencyLabel::Proficient};
  for (auto a : labels)
    for (auto b : labels)
      for (auto c : labels) CHECK(majority_vote(std::array{a, b, c}).has_value());
}

TEST_CASE("policy constructors and validation") {
  const auto single = ScoringPolicy::single_call();
  CHECK(single.n_calls == 1);
  CHECK(single.sampling == SamplingConfig{0.0, 0.01});
  const auto ens = ScoringPolicy::ensemble_vote();
  CHECK(ens.n_calls == 3);
  CHECK(ens.sampling == SamplingConfig{0.9, 0.95});
  CHECK(ens.tiebreak == ens.sampling);
  auto bad = ens;
  bad.n_calls = 2;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("single call uses one request at call index 1") {
  Fixture f;
  f.transport->replies["a"] = {"Some reasoning. " + marker(ProficiencyLabel::Developing)};
  const auto s = f.score(ScoringPolicy::single_call(), "a");
  CHECK(s.predicted == ProficiencyLabel::Developing);
  CHECK(s.votes.size() == 1);
  CHECK(s.transcripts.size() == 1);
  CHECK_FALSE(s.tiebreak_used);
  CHECK(s.usage.prompt_tokens == 100);
  REQUIRE(f.transport->log.size() == 1);
  CHECK(f.transport->log[0].first == 1);
}

TEST_CASE("ensemble with a majority stops after three calls") {
  Fixture f;
  f.transport->replies["a"] = {marker(ProficiencyLabel::Beginning), marker(ProficiencyLabel::Proficient),
                               marker(ProficiencyLabel::Beginning), marker(ProficiencyLabel::Developing)};
  const auto s = f.score(ScoringPolicy::ensemble_vote(), "a");
  CHECK(s.predicted == ProficiencyLabel::Beginning);
  CHECK(s.votes.size() == 3);
  CHECK(f.transport->log.size() == 3);
  CHECK(s.usage.prompt_tokens == 300);
}

TEST_CASE("a three-way split costs exactly one extra call whose label is final") {
  Fixture f;
  f.transport->replies["a"] = {marker(ProficiencyLabel::Beginning), marker(ProficiencyLabel::Developing),
                               marker(ProficiencyLabel::Proficient), marker(ProficiencyLabel::Proficient)};
  auto policy = ScoringPolicy::ensemble_vote();
  policy.tiebreak = SamplingConfig{0.5, 0.9};
  const auto s = f.score(policy, "a");
  CHECK(s.tiebreak_used);
  CHECK(s.predicted == ProficiencyLabel::Proficient);
  CHECK(s.votes.size() == 4);
  CHECK(s.transcripts.size() == 4);
  REQUIRE(f.transport->log.size() == 4);
  CHECK(f.transport->log[3].first == 4);
  CHECK(f.transport->log[3].second == SamplingConfig{0.5, 0.9});
  CHECK(f.transport->log[0].second == SamplingConfig{0.9, 0.95});
  // The extra call is distinguished in the transcript cache.
  CHECK(std::set<std::string>(s.transcripts.begin(), s.transcripts.end()).size() == 4);
}

TEST_CASE("extraction and transport failures are recorded, not thrown") {
  Fixture f;
  f.transport->replies["no marker"] = {"I think it is Developing."};
  const auto a = f.score(ScoringPolicy::single_call(), "no marker");
  CHECK_FALSE(a.predicted.has_value());
  REQUIRE(a.failure.has_value());
  CHECK(a.failure->code == ErrorCode::NoRatingFound);
  CHECK(a.transcripts.size() == 1);

  f.transport->replies["mid"] = {marker(ProficiencyLabel::Beginning), "!transport", marker(ProficiencyLabel::Beginning)};
  const auto b = f.score(ScoringPolicy::ensemble_vote(), "mid");
  CHECK_FALSE(b.predicted.has_value());
  REQUIRE(b.failure.has_value());
  CHECK(b.failure->code == ErrorCode::TransportError);
  CHECK(b.votes.size() == 1);

  f.task.scale = Scale::binomial();
  f.transport->replies["off"] = {marker(ProficiencyLabel::Developing)};
  const auto c = f.score(ScoringPolicy::single_call(), "off");
  REQUIRE(c.failure.has_value());
  CHECK(c.failure->code == ErrorCode::OffScaleLabel);
}

TEST_CASE("cache misses abort the run") {
  Fixture f;
  auto store = std::make_shared<TranscriptStore>(std::filesystem::temp_directory_path() / "autoscore-empty.jsonl");
  Gateway replay(nullptr, store);
  const auto policy = ScoringPolicy::single_call();
  const ScoringContext ctx{f.task, f.strategy, policy, f.components, f.model, replay, GatewayMode::ReplayStrict};
  try {
    score_response(ctx, {"r", "text"});
    FAIL("expected CacheMiss");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CacheMiss);
  }
  const std::vector<StudentResponse> many{{"a", "x"}, {"b", "y"}, {"c", "z"}};
  CHECK_THROWS_AS(score_all(ctx, many, 3), Error);
}

TEST_CASE("score_all orders by response id and is independent of parallelism") {
  const auto task = load_task(kRoot + "/tests/fixtures/e2e/tasks/SYN_1.json");
  const auto components = load_components(kRoot + "/data/prompts/H4_3/H4_3-v1");
  auto transport = std::make_shared<testing::SimulatedTransport>(task.scale, testing::syn1_keywords());
  Gateway gw(transport, nullptr);
  const auto strategy = preset("FS_CoT");
  const auto policy = ScoringPolicy::ensemble_vote();
  const ModelConfig model{"sim"};
  const ScoringContext ctx{task, strategy, policy, components, model, gw, GatewayMode::Live};

  std::vector<StudentResponse> responses;
  for (int i = 40; i > 0; --i) {
    responses.push_back({"id" + std::to_string(100 + i), "the particles slow down " + std::to_string(i)});
  }
  const auto serial = score_all(ctx, responses, 1);
  const auto parallel = score_all(ctx, responses, 8);
  REQUIRE(serial.size() == 40);
  CHECK(std::is_sorted(serial.begin(), serial.end(),
                       [](const auto& a, const auto& b) { return a.response_id < b.response_id; }));
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].response_id == parallel[i].response_id);
    CHECK(serial[i].predicted == parallel[i].predicted);
    CHECK(serial[i].votes == parallel[i].votes);
    CHECK(serial[i].transcripts == parallel[i].transcripts);
  }
  CHECK(score_all(ctx, std::span<const StudentResponse>{}, 4).empty());
}
