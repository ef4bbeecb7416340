#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "autoscore/domain.hpp"

namespace autoscore {

enum class Shots { Zero, Few };

// A prompt-composition recipe: zero/few-shot, chain-of-thought on/off and
// whether the item context plus rubric is included.
struct Strategy {
  Shots shots = Shots::Zero;
  bool cot = false;
  bool context_rubric = false;
  std::optional<std::string> preset_name;

  // Context/rubric without chain-of-thought is not one of the six presets.
  bool off_grid() const noexcept { return context_rubric && !cot; }
  // Preset name when set, otherwise a synthesized "ZS_noCoT_CR"-style name.
  std::string name() const;

  friend bool operator==(const Strategy& a, const Strategy& b) {
    return a.shots == b.shots && a.cot == b.cot && a.context_rubric == b.context_rubric;
  }
};

inline constexpr std::array<std::string_view, 6> kPresetNames = {
    "ZS_noCoT", "ZS_CoT", "ZS_CoT_CR", "FS_noCoT", "FS_CoT", "FS_CoT_CR"};

// Throws UnknownPreset.
Strategy preset(std::string_view name);

struct FewShotExample {
  std::string response_id;
  std::string response_text;
  // Everything after "Score: ": a bare score line for plain examples, the
  // full reasoning ending in the rating marker for CoT demonstrations.
  std::string score;
};

inline constexpr std::string_view kZeroShotCotPhrase = "Let's think step by step";

struct PromptComponentSet {
  std::string basic_role;
  std::string cr_referral;
  std::string context_rubric_text;
  std::vector<FewShotExample> few_shot_plain;
  std::vector<FewShotExample> few_shot_cot;
  std::string zs_cot_phrase{kZeroShotCotPhrase};

  // Every few-shot score must end in a rating marker that parses on the
  // task scale. Throws MissingComponent.
  void validate(const Scale& scale) const;
};

enum class Role { System, User };
std::string_view role_name(Role role) noexcept;

struct Message {
  Role role = Role::User;
  std::string content;

  friend bool operator==(const Message&, const Message&) = default;
};

struct MessageSequence {
  std::vector<Message> messages;

  const std::string& system() const;
  const std::string& user() const;
  // All contents joined with newlines; convenient for containment checks.
  std::string full_text() const;

  friend bool operator==(const MessageSequence&, const MessageSequence&) = default;
};

// Builds the system message (basic role, plus the context/rubric referral
// when CR is on) and a single user message whose blocks are separated by one
// blank line: [context+rubric] [few-shot examples] student response
// [zero-shot CoT phrase]. Throws MissingComponent.
MessageSequence assemble(const Strategy& strategy, const ScoringTask& task,
                         const PromptComponentSet& components, const StudentResponse& response);

// False when any example shares a response id or exact text with the test set.
bool check_disjoint(std::span<const FewShotExample> examples,
                    std::span<const GoldLabeledResponse> test_set);
bool check_disjoint(const PromptComponentSet& components,
                    std::span<const GoldLabeledResponse> test_set);

}  // namespace autoscore
