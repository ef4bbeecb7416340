#include "autoscore/domain.hpp"

#include <algorithm>
#include <unordered_set>

#include "autoscore/common.hpp"
#include "autoscore/error.hpp"

namespace autoscore {

namespace {

constexpr std::array<ProficiencyLabel, 2> kBinomialLabels = {ProficiencyLabel::Beginning,
                                                             ProficiencyLabel::Proficient};

}  // namespace

std::string_view label_name(ProficiencyLabel label) noexcept {
  switch (label) {
    case ProficiencyLabel::Beginning: return "Beginning";
    case ProficiencyLabel::Developing: return "Developing";
    case ProficiencyLabel::Proficient: return "Proficient";
  }
  return "Beginning";
}

std::optional<ProficiencyLabel> parse_label(std::string_view name) noexcept {
  for (auto label : kAllLabels) {
    if (label_name(label) == name) return label;
  }
  return std::nullopt;
}

std::string_view Scale::name() const noexcept {
  return kind_ == ScaleKind::Binomial ? "binomial" : "trinomial";
}

std::span<const ProficiencyLabel> Scale::labels() const noexcept {
  if (kind_ == ScaleKind::Binomial) return kBinomialLabels;
  return kAllLabels;
}

bool Scale::contains(ProficiencyLabel label) const noexcept { return index_of(label).has_value(); }

std::optional<std::size_t> Scale::index_of(ProficiencyLabel label) const noexcept {
  const auto allowed = labels();
  const auto it = std::find(allowed.begin(), allowed.end(), label);
  if (it == allowed.end()) return std::nullopt;
  return static_cast<std::size_t>(it - allowed.begin());
}

std::optional<Scale> parse_scale(std::string_view name) noexcept {
  const auto lowered = to_lower_ascii(name);
  if (lowered == "binomial") return Scale::binomial();
  if (lowered == "trinomial") return Scale::trinomial();
  return std::nullopt;
}

Rubric::Rubric(std::vector<RubricComponent> components) : components_(std::move(components)) {
  if (components_.empty()) {
    throw Error(ErrorCode::InvalidComponent, "rubric needs at least one component");
  }
  std::unordered_set<std::string> seen;
  for (const auto& c : components_) {
    if (c.id.empty()) throw Error(ErrorCode::InvalidComponent, "rubric component with empty id");
    if (!seen.insert(c.id).second) {
      throw Error(ErrorCode::InvalidComponent, "duplicate rubric component id '" + c.id + "'");
    }
  }
}

bool Rubric::has_component(std::string_view id) const noexcept {
  return std::any_of(components_.begin(), components_.end(),
                     [&](const RubricComponent& c) { return c.id == id; });
}

ProficiencyLabel holistic_score(const std::set<std::string>& satisfied, const Rubric& rubric) {
  for (const auto& id : satisfied) {
    if (!rubric.has_component(id)) {
      throw Error(ErrorCode::InvalidComponent, "unknown rubric component '" + id + "'");
    }
  }
  if (satisfied.empty()) return ProficiencyLabel::Beginning;
  if (satisfied.size() == rubric.components().size()) return ProficiencyLabel::Proficient;
  return ProficiencyLabel::Developing;
}

void ScoringTask::validate() const {
  if (id.empty()) throw Error(ErrorCode::ConfigError, "task id is empty");
  if (rubric.components().size() == 1 && scale.kind() != ScaleKind::Binomial) {
    throw Error(ErrorCode::ConfigError,
                "task " + id + ": a single-component rubric requires a binomial scale");
  }
}

ScoringTask task_from_json(const nlohmann::json& doc) {
  try {
    const auto scale = parse_scale(doc.at("scale").get<std::string>());
    if (!scale) throw Error(ErrorCode::ConfigError, "unknown scale " + doc.at("scale").dump());
    std::vector<RubricComponent> components;
    for (const auto& c : doc.at("rubric").at("components")) {
      components.push_back({c.at("id").get<std::string>(), c.at("description").get<std::string>()});
    }
    ScoringTask task{doc.at("id").get<std::string>(), *scale, doc.value("context", std::string{}),
                     Rubric(std::move(components))};
    task.validate();
    return task;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("task definition: ") + e.what());
  }
}

nlohmann::json task_to_json(const ScoringTask& task) {
  nlohmann::json components = nlohmann::json::array();
  for (const auto& c : task.rubric.components()) {
    components.push_back({{"id", c.id}, {"description", c.description}});
  }
  return {{"id", task.id},
          {"scale", std::string(task.scale.name())},
          {"context", task.context},
          {"rubric", {{"components", components}}}};
}

ScoringTask load_task(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  return task_from_json(doc);
}

std::string render_context_rubric(const ScoringTask& task) {
  std::string out = "CONTEXT\n\n" + task.context + "\n\nRUBRIC\n\n";
  std::string all_of;
  for (const auto& c : task.rubric.components()) {
    out += "- COMPONENT " + c.id + ": " + c.description + "\n";
    if (!all_of.empty()) all_of += "AND ";
    all_of += "<<<COMPONENT " + c.id + ">>>";
  }
  out += "\n- Holistic score: The score will be 'Proficient' if the response includes ALL of the criteria " +
         all_of + "; ";
  if (task.scale.contains(ProficiencyLabel::Developing)) {
    out += "'Developing' if the response includes at least ONE BUT NOT ALL of the criteria in 'Proficient;' ";
  }
  out += "and 'Beginning' if the response includes NONE of the criteria in 'Proficient.'";
  return out;
}

}  // namespace autoscore
