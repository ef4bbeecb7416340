#include "simulated_transport.hpp"

#include <algorithm>
#include <set>

#include "autoscore/common.hpp"

namespace autoscore::testing {

namespace {

std::uint64_t hex_prefix(const std::string& hex) { return std::stoull(hex.substr(0, 15), nullptr, 16); }

ProficiencyLabel shift(const Scale& scale, ProficiencyLabel label, bool up) {
  const auto labels = scale.labels();
  auto idx = *scale.index_of(label);
  if (up) {
    idx = idx + 1 < labels.size() ? idx + 1 : idx - 1;
  } else {
    idx = idx > 0 ? idx - 1 : idx + 1;
  }
  return labels[idx];
}

}  // namespace

SimulatedTransport::SimulatedTransport(Scale scale, std::vector<std::vector<std::string>> keywords)
    : scale_(scale), keywords_(std::move(keywords)) {}

std::string SimulatedTransport::student_response(const std::string& user) {
  static const std::string kOpen = "Student response: \"";
  const auto start = user.rfind(kOpen);
  if (start == std::string::npos) return {};
  const auto from = start + kOpen.size();
  auto end = user.find("\"\n\n", from);
  if (end == std::string::npos) end = user.rfind('"');
  if (end == std::string::npos || end < from) return user.substr(from);
  return user.substr(from, end - from);
}

ChatReply SimulatedTransport::send(const ChatRequest& request) {
  ++calls_;
  const auto& user = request.messages.user();
  const auto text = to_lower_ascii(student_response(user));

  std::set<std::string> satisfied;
  std::vector<RubricComponent> components;
  for (std::size_t i = 0; i < keywords_.size(); ++i) {
    const std::string id(1, static_cast<char>('A' + i));
    components.push_back({id, ""});
    if (std::any_of(keywords_[i].begin(), keywords_[i].end(),
                    [&](const std::string& k) { return text.find(k) != std::string::npos; })) {
      satisfied.insert(id);
    }
  }
  auto label = holistic_score(satisfied, Rubric(components));

  const bool cot = user.find("Let's think step by step") != std::string::npos ||
                   user.find("<<<COMPONENT") != std::string::npos;
  const bool few = user.find("- Student response:") != std::string::npos;
  const bool cr = user.find("RUBRIC") != std::string::npos;
  double noise = 0.45 - (few ? 0.1 : 0.0) - (cot ? 0.1 : 0.0) - (cr ? 0.1 : 0.0) + 0.15 * request.sampling.temperature;

  const auto h = hex_prefix(cache_key(request));
  const double u = static_cast<double>(h % 1000) / 1000.0;
  const bool up = ((h >> 12) & 1) != 0;
  ChatReply reply;
  if (u >= 0.97) {
    reply.text = "The response is hard to judge; I cannot give a rating.";
  } else {
    if (u < noise) label = shift(scale_, label, up);
    const std::string name(label_name(label));
    if (cot) {
      std::string reasoning;
      for (const auto& c : components) {
        reasoning += satisfied.contains(c.id) ? "The response includes evidence for <<<COMPONENT " + c.id + ">>>. "
                                              : "The response does not include <<<COMPONENT " + c.id + ">>>. ";
      }
      reply.text = reasoning + "Weighing 'Beginning' against 'Proficient', the appropriate score for the response is '" +
                   name + ".' Rating: [[" + name + "]]";
    } else {
      reply.text = ((h >> 20) & 1) ? "Rating: [[" + name + "]]" : "Rating: [[" + to_lower_ascii(name) + "]].";
    }
  }
  reply.usage.prompt_tokens = static_cast<std::int64_t>(request.messages.full_text().size() / 4);
  reply.usage.completion_tokens = static_cast<std::int64_t>(reply.text.size() / 4 + 1);
  reply.latency_ms = 1;
  return reply;
}

std::vector<std::vector<std::string>> syn1_keywords() {
  return {{"liquid", "droplet", "condens"}, {"slow", "lose", "kinetic energy"}};
}

}  // namespace autoscore::testing
