#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace autoscore {

// Ordinal proficiency scale. The underlying value is the rank used for kappa
// weights and table ordering.
enum class ProficiencyLabel : std::uint8_t { Beginning = 0, Developing = 1, Proficient = 2 };

inline constexpr std::array<ProficiencyLabel, 3> kAllLabels = {
    ProficiencyLabel::Beginning, ProficiencyLabel::Developing, ProficiencyLabel::Proficient};

constexpr int label_rank(ProficiencyLabel label) noexcept { return static_cast<int>(label); }

std::string_view label_name(ProficiencyLabel label) noexcept;

// Exact spelling only ("Beginning", "Developing", "Proficient").
std::optional<ProficiencyLabel> parse_label(std::string_view name) noexcept;

enum class ScaleKind { Binomial, Trinomial };

class Scale {
 public:
  static Scale binomial() { return Scale(ScaleKind::Binomial); }
  static Scale trinomial() { return Scale(ScaleKind::Trinomial); }
  explicit Scale(ScaleKind kind) : kind_(kind) {}

  ScaleKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept;
  // Allowed labels in rank order.
  std::span<const ProficiencyLabel> labels() const noexcept;
  std::size_t size() const noexcept { return labels().size(); }
  bool contains(ProficiencyLabel label) const noexcept;
  // Position of a label among the allowed labels; nullopt when off-scale.
  std::optional<std::size_t> index_of(ProficiencyLabel label) const noexcept;

  friend bool operator==(const Scale&, const Scale&) = default;

 private:
  ScaleKind kind_;
};

std::optional<Scale> parse_scale(std::string_view name) noexcept;

struct RubricComponent {
  std::string id;
  std::string description;
};

// Holistic rule: every component satisfied -> Proficient, none -> Beginning,
// anything in between -> Developing.
class Rubric {
 public:
  explicit Rubric(std::vector<RubricComponent> components);

  const std::vector<RubricComponent>& components() const noexcept { return components_; }
  bool has_component(std::string_view id) const noexcept;

 private:
  std::vector<RubricComponent> components_;
};

ProficiencyLabel holistic_score(const std::set<std::string>& satisfied, const Rubric& rubric);

struct ScoringTask {
  std::string id;
  Scale scale = Scale::trinomial();
  std::string context;
  Rubric rubric;

  // Throws ConfigError when a single-component rubric is paired with a
  // trinomial scale (Developing would be unreachable).
  void validate() const;
};

struct StudentResponse {
  std::string id;
  std::string text;  // byte-exact as ingested
};

struct GoldLabeledResponse {
  StudentResponse response;
  ProficiencyLabel gold = ProficiencyLabel::Beginning;
};

ScoringTask task_from_json(const nlohmann::json& doc);
nlohmann::json task_to_json(const ScoringTask& task);
ScoringTask load_task(const std::filesystem::path& path);

// CONTEXT and RUBRIC blocks in the layout the prompt components use, with
// the holistic rule spelled out for the task's component ids.
std::string render_context_rubric(const ScoringTask& task);

}  // namespace autoscore
