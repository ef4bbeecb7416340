#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "autoscore/prompt.hpp"

namespace autoscore {

// Statuses only move forward, one step at a time. A revision starts a new
// Draft entry that links back to its parent.
enum class PromptStatus { Draft = 0, Reviewed = 1, Validated = 2, Final = 3 };

std::string_view prompt_status_name(PromptStatus status) noexcept;
std::optional<PromptStatus> parse_prompt_status(std::string_view name) noexcept;

struct ReviewNote {
  std::string reviewer;
  std::string action;  // review, approve, revise, validate
  std::string note;
  std::string timestamp;
};

struct ValidationRecord {
  std::string run_id;
  std::string validation_set;
  std::string strategy;
  std::string policy;
  std::size_t sampled = 0;
  std::size_t scored = 0;
  std::size_t failed = 0;
  std::optional<double> accuracy;
  std::string timestamp;
};

struct PromptRegistryEntry {
  std::string version_id;
  std::string task_id;
  std::optional<std::string> parent;
  PromptStatus status = PromptStatus::Draft;
  std::vector<ReviewNote> notes;
  std::vector<ValidationRecord> validations;
  // Digest of the component files, fixed when the entry becomes Final.
  std::optional<std::string> content_digest;
  std::string created;

  nlohmann::json to_json() const;
  static PromptRegistryEntry from_json(const nlohmann::json& doc);
};

// Component file names inside <root>/<task>/<version>/.
inline constexpr std::string_view kBasicRoleFile = "basic_role.txt";
inline constexpr std::string_view kCrReferralFile = "cr_referral.txt";
inline constexpr std::string_view kContextRubricFile = "context_rubric.txt";
inline constexpr std::string_view kZsCotPhraseFile = "zs_cot_phrase.txt";
inline constexpr std::string_view kFewShotFile = "few_shot.json";

// Reads a version directory. Text files lose one trailing newline; a
// missing zs_cot_phrase.txt means the standard phrase.
PromptComponentSet load_components(const std::filesystem::path& version_dir);
void write_components(const std::filesystem::path& version_dir, const PromptComponentSet& components);

// Versioned prompt components for every task, persisted as
// <root>/registry.json plus one directory per version.
class PromptRegistry {
 public:
  // Loads <root>/registry.json (an absent file means an empty registry) and
  // checks that lineage forms a forest.
  static PromptRegistry open(const std::filesystem::path& root);

  const std::filesystem::path& root() const noexcept { return root_; }
  const std::vector<PromptRegistryEntry>& entries() const noexcept { return entries_; }
  const PromptRegistryEntry& get(std::string_view version_id) const;
  std::filesystem::path version_dir(const PromptRegistryEntry& entry) const;

  // Newest Final entry for the task, or nullopt.
  const PromptRegistryEntry* latest_final(std::string_view task_id) const;
  // Newest entry of any status for the task, or nullopt.
  const PromptRegistryEntry* latest(std::string_view task_id) const;

  PromptComponentSet components(std::string_view version_id) const;

  const PromptRegistryEntry& add(const std::string& task_id, const std::string& version_id,
                                 const PromptComponentSet& components, const std::string& author);
  // Draft -> Reviewed.
  const PromptRegistryEntry& review(std::string_view version_id, const std::string& reviewer, const std::string& note);
  // Attaches a validation run; the entry must be Reviewed or Validated.
  const PromptRegistryEntry& record_validation(std::string_view version_id, ValidationRecord record);
  // Reviewed -> Validated (needs a validation record), Validated -> Final.
  const PromptRegistryEntry& approve(std::string_view version_id, const std::string& reviewer, const std::string& note);
  // New Draft copied from an existing version, linked as its child.
  const PromptRegistryEntry& revise(std::string_view version_id, const std::string& new_version_id,
                                    const std::string& reviewer, const std::string& note);

  // Final entries must still match their recorded digest. Throws ConfigError.
  void verify_immutable(std::string_view version_id) const;
  std::string content_digest(std::string_view version_id) const;

  void save() const;

 private:
  explicit PromptRegistry(std::filesystem::path root) : root_(std::move(root)) {}
  PromptRegistryEntry& mutable_entry(std::string_view version_id);
  void check_lineage() const;

  std::filesystem::path root_;
  std::vector<PromptRegistryEntry> entries_;
};

}  // namespace autoscore
