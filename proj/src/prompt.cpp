#include "autoscore/prompt.hpp"

#include <unordered_set>

#include "autoscore/common.hpp"
#include "autoscore/error.hpp"
#include "autoscore/extraction.hpp"

namespace autoscore {

std::string Strategy::name() const {
  if (preset_name) return *preset_name;
  std::string out = shots == Shots::Zero ? "ZS" : "FS";
  out += cot ? "_CoT" : "_noCoT";
  if (context_rubric) out += "_CR";
  return out;
}

Strategy preset(std::string_view name) {
  for (auto candidate : kPresetNames) {
    if (candidate != name) continue;
    Strategy s;
    s.shots = name.starts_with("FS") ? Shots::Few : Shots::Zero;
    s.cot = name.find("_CoT") != std::string_view::npos;
    s.context_rubric = name.ends_with("_CR");
    s.preset_name = std::string(name);
    return s;
  }
  throw Error(ErrorCode::UnknownPreset, "unknown strategy preset '" + std::string(name) + "'");
}

void PromptComponentSet::validate(const Scale& scale) const {
  auto check = [&](const std::vector<FewShotExample>& examples, std::string_view kind) {
    for (const auto& ex : examples) {
      try {
        const auto result = extract_rating(ex.score, scale);
        const auto tail = trim(std::string_view(ex.score).substr(result.marker_end));
        if (!tail.empty() && tail != ".") {
          throw Error(ErrorCode::MissingComponent, "text after the rating marker");
        }
      } catch (const Error& e) {
        throw Error(ErrorCode::MissingComponent, std::string(kind) + " example " + ex.response_id +
                                                     " does not end with a usable rating marker: " +
                                                     e.what());
      }
    }
  };
  check(few_shot_plain, "few-shot");
  check(few_shot_cot, "few-shot CoT");
}

std::string_view role_name(Role role) noexcept { return role == Role::System ? "system" : "user"; }

const std::string& MessageSequence::system() const {
  for (const auto& m : messages) {
    if (m.role == Role::System) return m.content;
  }
  throw Error(ErrorCode::MissingComponent, "message sequence has no system message");
}

const std::string& MessageSequence::user() const {
  for (const auto& m : messages) {
    if (m.role == Role::User) return m.content;
  }
  throw Error(ErrorCode::MissingComponent, "message sequence has no user message");
}

std::string MessageSequence::full_text() const {
  std::string out;
  for (const auto& m : messages) {
    if (!out.empty()) out += '\n';
    out += m.content;
  }
  return out;
}

namespace {

void require(bool present, std::string_view component, std::string_view strategy) {
  if (!present) {
    throw Error(ErrorCode::MissingComponent,
                "strategy " + std::string(strategy) + " needs prompt component '" + std::string(component) + "'");
  }
}

std::string render_examples(const std::vector<FewShotExample>& examples) {
  std::string out;
  for (const auto& ex : examples) {
    if (!out.empty()) out += '\n';
    out += "- Student response: \"" + ex.response_text + "\"\n- Score: " + ex.score;
  }
  return out;
}

}  // namespace

MessageSequence assemble(const Strategy& strategy, const ScoringTask& task,
                         const PromptComponentSet& components, const StudentResponse& response) {
  const auto name = strategy.name();
  const bool few = strategy.shots == Shots::Few;
  const auto& examples = strategy.cot ? components.few_shot_cot : components.few_shot_plain;

  require(!components.basic_role.empty(), "basic_role", name);
  if (strategy.context_rubric) {
    require(!components.cr_referral.empty(), "cr_referral", name);
    require(!components.context_rubric_text.empty(), "context_rubric", name);
  }
  if (few) require(!examples.empty(), strategy.cot ? "few_shot_cot" : "few_shot_plain", name);
  if (!few && strategy.cot) require(!components.zs_cot_phrase.empty(), "zs_cot_phrase", name);

  if (strategy.off_grid()) {
    log_warning("task " + task.id + ": strategy " + name +
                " includes context/rubric without chain-of-thought (outside the six presets)");
  }

  std::string system = components.basic_role;
  if (strategy.context_rubric) system += " " + components.cr_referral;

  std::vector<std::string> blocks;
  if (strategy.context_rubric) blocks.push_back(components.context_rubric_text);
  if (few) blocks.push_back(render_examples(examples));
  blocks.push_back("Student response: \"" + response.text + "\"");
  if (!few && strategy.cot) blocks.push_back(components.zs_cot_phrase);

  std::string user;
  for (const auto& block : blocks) {
    if (!user.empty()) user += "\n\n";
    user += block;
  }

  MessageSequence out;
  out.messages.push_back({Role::System, std::move(system)});
  out.messages.push_back({Role::User, std::move(user)});
  return out;
}

bool check_disjoint(std::span<const FewShotExample> examples,
                    std::span<const GoldLabeledResponse> test_set) {
  std::unordered_set<std::string_view> ids;
  std::unordered_set<std::string_view> texts;
  for (const auto& item : test_set) {
    ids.insert(item.response.id);
    texts.insert(item.response.text);
  }
  for (const auto& ex : examples) {
    if (ids.contains(ex.response_id) || texts.contains(ex.response_text)) return false;
  }
  return true;
}

bool check_disjoint(const PromptComponentSet& components,
                    std::span<const GoldLabeledResponse> test_set) {
  return check_disjoint(components.few_shot_plain, test_set) &&
         check_disjoint(components.few_shot_cot, test_set);
}

}  // namespace autoscore
