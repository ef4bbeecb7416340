#include "autoscore/registry.hpp"

#include <algorithm>
#include <set>

#include "autoscore/common.hpp"
#include "autoscore/error.hpp"

namespace autoscore {

std::string_view prompt_status_name(PromptStatus status) noexcept {
  switch (status) {
    case PromptStatus::Draft: return "Draft";
    case PromptStatus::Reviewed: return "Reviewed";
    case PromptStatus::Validated: return "Validated";
    case PromptStatus::Final: return "Final";
  }
  return "Draft";
}

std::optional<PromptStatus> parse_prompt_status(std::string_view name) noexcept {
  for (auto s : {PromptStatus::Draft, PromptStatus::Reviewed, PromptStatus::Validated, PromptStatus::Final}) {
    if (to_lower_ascii(prompt_status_name(s)) == to_lower_ascii(name)) return s;
  }
  return std::nullopt;
}

nlohmann::json PromptRegistryEntry::to_json() const {
  nlohmann::json notes_json = nlohmann::json::array();
  for (const auto& n : notes) {
    notes_json.push_back({{"reviewer", n.reviewer}, {"action", n.action}, {"note", n.note}, {"timestamp", n.timestamp}});
  }
  nlohmann::json validations_json = nlohmann::json::array();
  for (const auto& v : validations) {
    validations_json.push_back({{"run_id", v.run_id},
                                {"validation_set", v.validation_set},
                                {"strategy", v.strategy},
                                {"policy", v.policy},
                                {"sampled", v.sampled},
                                {"scored", v.scored},
                                {"failed", v.failed},
                                {"accuracy", v.accuracy ? nlohmann::json(*v.accuracy) : nlohmann::json()},
                                {"timestamp", v.timestamp}});
  }
  return {{"version_id", version_id},
          {"task_id", task_id},
          {"parent", parent ? nlohmann::json(*parent) : nlohmann::json()},
          {"status", std::string(prompt_status_name(status))},
          {"created", created},
          {"content_digest", content_digest ? nlohmann::json(*content_digest) : nlohmann::json()},
          {"notes", notes_json},
          {"validations", validations_json}};
}

PromptRegistryEntry PromptRegistryEntry::from_json(const nlohmann::json& doc) {
  PromptRegistryEntry e;
  e.version_id = doc.at("version_id").get<std::string>();
  e.task_id = doc.at("task_id").get<std::string>();
  if (doc.contains("parent") && doc.at("parent").is_string()) e.parent = doc.at("parent").get<std::string>();
  const auto status = parse_prompt_status(doc.at("status").get<std::string>());
  if (!status) throw Error(ErrorCode::ConfigError, "unknown prompt status " + doc.at("status").dump());
  e.status = *status;
  e.created = doc.value("created", std::string{});
  if (doc.contains("content_digest") && doc.at("content_digest").is_string()) {
    e.content_digest = doc.at("content_digest").get<std::string>();
  }
  for (const auto& n : doc.value("notes", nlohmann::json::array())) {
    e.notes.push_back({n.value("reviewer", ""), n.value("action", ""), n.value("note", ""), n.value("timestamp", "")});
  }
  for (const auto& v : doc.value("validations", nlohmann::json::array())) {
    ValidationRecord r;
    r.run_id = v.value("run_id", "");
    r.validation_set = v.value("validation_set", "");
    r.strategy = v.value("strategy", "");
    r.policy = v.value("policy", "");
    r.sampled = v.value("sampled", std::size_t{0});
    r.scored = v.value("scored", std::size_t{0});
    r.failed = v.value("failed", std::size_t{0});
    if (v.contains("accuracy") && v.at("accuracy").is_number()) r.accuracy = v.at("accuracy").get<double>();
    r.timestamp = v.value("timestamp", "");
    e.validations.push_back(std::move(r));
  }
  return e;
}

namespace {

std::string read_component(const std::filesystem::path& path) {
  auto text = read_text_file(path);
  if (text.ends_with("\r\n")) {
    text.resize(text.size() - 2);
  } else if (text.ends_with('\n')) {
    text.pop_back();
  }
  return text;
}

std::vector<FewShotExample> examples_from_json(const nlohmann::json& list) {
  std::vector<FewShotExample> out;
  for (const auto& e : list) {
    out.push_back({e.at("response_id").get<std::string>(), e.at("text").get<std::string>(),
                   e.at("score").get<std::string>()});
  }
  return out;
}

nlohmann::json examples_to_json(const std::vector<FewShotExample>& examples) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : examples) {
    out.push_back({{"response_id", e.response_id}, {"text", e.response_text}, {"score", e.score}});
  }
  return out;
}

void require_reviewer(const std::string& reviewer) {
  if (trim(reviewer).empty()) throw Error(ErrorCode::InvalidArgument, "a reviewer id is required");
}

}  // namespace

PromptComponentSet load_components(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::MissingComponent, "prompt version directory " + dir.string() + " does not exist");
  }
  PromptComponentSet set;
  auto optional_text = [&](std::string_view name) -> std::string {
    const auto path = dir / name;
    return std::filesystem::exists(path) ? read_component(path) : std::string{};
  };
  set.basic_role = optional_text(kBasicRoleFile);
  set.cr_referral = optional_text(kCrReferralFile);
  set.context_rubric_text = optional_text(kContextRubricFile);
  if (std::filesystem::exists(dir / kZsCotPhraseFile)) set.zs_cot_phrase = read_component(dir / kZsCotPhraseFile);
  if (std::filesystem::exists(dir / kFewShotFile)) {
    try {
      const auto doc = nlohmann::json::parse(read_text_file(dir / kFewShotFile));
      set.few_shot_plain = examples_from_json(doc.value("plain", nlohmann::json::array()));
      set.few_shot_cot = examples_from_json(doc.value("cot", nlohmann::json::array()));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ConfigError, (dir / kFewShotFile).string() + ": " + e.what());
    }
  }
  return set;
}

void write_components(const std::filesystem::path& dir, const PromptComponentSet& c) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / kBasicRoleFile, c.basic_role + "\n");
  write_text_file(dir / kCrReferralFile, c.cr_referral + "\n");
  write_text_file(dir / kContextRubricFile, c.context_rubric_text + "\n");
  write_text_file(dir / kZsCotPhraseFile, c.zs_cot_phrase + "\n");
  const nlohmann::json few = {{"plain", examples_to_json(c.few_shot_plain)}, {"cot", examples_to_json(c.few_shot_cot)}};
  write_text_file(dir / kFewShotFile, few.dump(2) + "\n");
}

PromptRegistry PromptRegistry::open(const std::filesystem::path& root) {
  PromptRegistry reg(root);
  const auto index = root / "registry.json";
  if (std::filesystem::exists(index)) {
    try {
      const auto doc = nlohmann::json::parse(read_text_file(index));
      for (const auto& e : doc.at("entries")) reg.entries_.push_back(PromptRegistryEntry::from_json(e));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ConfigError, index.string() + ": " + e.what());
    }
  }
  reg.check_lineage();
  return reg;
}

void PromptRegistry::check_lineage() const {
  std::set<std::string_view> ids;
  for (const auto& e : entries_) {
    if (!ids.insert(e.version_id).second) {
      throw Error(ErrorCode::ConfigError, "duplicate prompt version '" + e.version_id + "'");
    }
  }
  for (const auto& e : entries_) {
    std::set<std::string_view> seen{e.version_id};
    const auto* cur = &e;
    while (cur->parent) {
      const auto it = std::find_if(entries_.begin(), entries_.end(),
                                   [&](const PromptRegistryEntry& x) { return x.version_id == *cur->parent; });
      if (it == entries_.end()) {
        throw Error(ErrorCode::ConfigError, "prompt version " + cur->version_id + " has unknown parent " + *cur->parent);
      }
      if (it->task_id != cur->task_id) {
        throw Error(ErrorCode::ConfigError, "prompt version " + cur->version_id + " and its parent belong to different tasks");
      }
      if (!seen.insert(it->version_id).second) {
        throw Error(ErrorCode::ConfigError, "prompt lineage cycle through " + it->version_id);
      }
      cur = &*it;
    }
  }
}

const PromptRegistryEntry& PromptRegistry::get(std::string_view version_id) const {
  for (const auto& e : entries_) {
    if (e.version_id == version_id) return e;
  }
  throw Error(ErrorCode::NotFound, "no prompt version '" + std::string(version_id) + "'");
}

PromptRegistryEntry& PromptRegistry::mutable_entry(std::string_view version_id) {
  return const_cast<PromptRegistryEntry&>(get(version_id));
}

std::filesystem::path PromptRegistry::version_dir(const PromptRegistryEntry& entry) const {
  return root_ / entry.task_id / entry.version_id;
}

const PromptRegistryEntry* PromptRegistry::latest_final(std::string_view task_id) const {
  const PromptRegistryEntry* found = nullptr;
  for (const auto& e : entries_) {
    if (e.task_id == task_id && e.status == PromptStatus::Final) found = &e;
  }
  return found;
}

const PromptRegistryEntry* PromptRegistry::latest(std::string_view task_id) const {
  const PromptRegistryEntry* found = nullptr;
  for (const auto& e : entries_) {
    if (e.task_id == task_id) found = &e;
  }
  return found;
}

PromptComponentSet PromptRegistry::components(std::string_view version_id) const {
  return load_components(version_dir(get(version_id)));
}

std::string PromptRegistry::content_digest(std::string_view version_id) const {
  const auto dir = version_dir(get(version_id));
  std::string material;
  for (auto name : {kBasicRoleFile, kCrReferralFile, kContextRubricFile, kZsCotPhraseFile, kFewShotFile}) {
    const auto path = dir / name;
    material += std::string(name) + "\n";
    material += std::filesystem::exists(path) ? sha256_file(path) : std::string("absent");
    material += "\n";
  }
  return sha256_hex(material);
}

const PromptRegistryEntry& PromptRegistry::add(const std::string& task_id, const std::string& version_id,
                                               const PromptComponentSet& components, const std::string& author) {
  require_reviewer(author);
  if (std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.version_id == version_id; })) {
    throw Error(ErrorCode::ConfigError, "prompt version '" + version_id + "' already exists");
  }
  PromptRegistryEntry e;
  e.version_id = version_id;
  e.task_id = task_id;
  e.created = utc_timestamp();
  e.notes.push_back({author, "write", "", e.created});
  write_components(root_ / task_id / version_id, components);
  entries_.push_back(std::move(e));
  return entries_.back();
}

const PromptRegistryEntry& PromptRegistry::review(std::string_view version_id, const std::string& reviewer,
                                                  const std::string& note) {
  require_reviewer(reviewer);
  auto& e = mutable_entry(version_id);
  if (e.status != PromptStatus::Draft) {
    throw Error(ErrorCode::InvalidTransition, "only Draft versions can be reviewed; " + e.version_id + " is " +
                                                  std::string(prompt_status_name(e.status)));
  }
  e.status = PromptStatus::Reviewed;
  e.notes.push_back({reviewer, "review", note, utc_timestamp()});
  return e;
}

const PromptRegistryEntry& PromptRegistry::record_validation(std::string_view version_id, ValidationRecord record) {
  auto& e = mutable_entry(version_id);
  if (e.status != PromptStatus::Reviewed && e.status != PromptStatus::Validated) {
    throw Error(ErrorCode::InvalidTransition, "validation needs a Reviewed version; " + e.version_id + " is " +
                                                  std::string(prompt_status_name(e.status)));
  }
  if (record.timestamp.empty()) record.timestamp = utc_timestamp();
  e.validations.push_back(std::move(record));
  return e;
}

const PromptRegistryEntry& PromptRegistry::approve(std::string_view version_id, const std::string& reviewer,
                                                   const std::string& note) {
  require_reviewer(reviewer);
  auto& e = mutable_entry(version_id);
  switch (e.status) {
    case PromptStatus::Reviewed:
      if (e.validations.empty()) {
        throw Error(ErrorCode::InvalidTransition, e.version_id + " has no validation run to approve");
      }
      e.status = PromptStatus::Validated;
      break;
    case PromptStatus::Validated:
      e.status = PromptStatus::Final;
      e.content_digest = content_digest(version_id);
      break;
    default:
      throw Error(ErrorCode::InvalidTransition, "cannot approve " + e.version_id + " in status " +
                                                    std::string(prompt_status_name(e.status)));
  }
  e.notes.push_back({reviewer, "approve", note, utc_timestamp()});
  return e;
}

const PromptRegistryEntry& PromptRegistry::revise(std::string_view version_id, const std::string& new_version_id,
                                                  const std::string& reviewer, const std::string& note) {
  require_reviewer(reviewer);
  const auto parent = get(version_id);
  const auto components = load_components(version_dir(parent));
  add(parent.task_id, new_version_id, components, reviewer);
  auto& child = entries_.back();
  child.parent = parent.version_id;
  child.notes.back() = {reviewer, "revise", note, child.created};
  return child;
}

void PromptRegistry::verify_immutable(std::string_view version_id) const {
  const auto& e = get(version_id);
  if (e.status != PromptStatus::Final || !e.content_digest) return;
  if (content_digest(version_id) != *e.content_digest) {
    throw Error(ErrorCode::ConfigError, "Final prompt version " + e.version_id + " was modified after approval");
  }
}

void PromptRegistry::save() const {
  nlohmann::json doc = {{"entries", nlohmann::json::array()}};
  for (const auto& e : entries_) doc["entries"].push_back(e.to_json());
  write_text_file(root_ / "registry.json", doc.dump(2) + "\n");
}

}  // namespace autoscore
