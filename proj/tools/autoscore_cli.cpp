// Command-line front end over the C interface.
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "autoscore/autoscore.h"

namespace {

struct Owned {
  char* ptr = nullptr;
  ~Owned() { as_string_free(ptr); }
  std::string str() const { return ptr ? ptr : ""; }
};

struct SessionCloser {
  void operator()(as_session* s) const { as_session_close(s); }
};
using Session = std::unique_ptr<as_session, SessionCloser>;

int report_failure(as_status status) {
  std::cerr << "error [" << as_status_name(status) << "]: " << as_last_error() << '\n';
  return as_exit_code(status);
}

struct Common {
  std::string config;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> parallelism;
};

as_status open_session(const Common& c, Session& session) {
  as_session* raw = nullptr;
  if (auto st = as_session_open(c.config.c_str(), &raw); st != AS_OK) return st;
  session.reset(raw);
  if (c.mode) {
    if (auto st = as_session_set_mode(raw, c.mode->c_str()); st != AS_OK) return st;
  }
  if (c.seed) {
    if (auto st = as_session_set_seed(raw, *c.seed); st != AS_OK) return st;
  }
  if (c.out) {
    if (auto st = as_session_set_output_dir(raw, c.out->c_str()); st != AS_OK) return st;
  }
  if (c.parallelism) {
    if (auto st = as_session_set_parallelism(raw, *c.parallelism); st != AS_OK) return st;
  }
  return AS_OK;
}

void add_common(CLI::App* cmd, Common& c, bool with_run_flags) {
  cmd->add_option("--config", c.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "Output directory");
  if (with_run_flags) {
    cmd->add_option("--mode", c.mode, "Gateway mode")
        ->check(CLI::IsMember({"live", "record", "replay", "replay-strict"}));
    cmd->add_option("--seed", c.seed, "Sampling seed");
    cmd->add_option("--parallelism", c.parallelism, "Concurrent responses per cell")->check(CLI::PositiveNumber);
  }
}

void quiet_logger(int level, const char* message, void*) {
  if (level >= 1) std::fprintf(stderr, "[%s] %s\n", level == 1 ? "warn" : "error", message);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rubric-based short-answer scoring experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(as_version()));
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only print warnings and errors");

  Common run_opts;
  auto* run_cmd = app.add_subcommand("run", "Run the strategy x policy grid");
  add_common(run_cmd, run_opts, true);

  Common report_opts;
  auto* report_cmd = app.add_subcommand("report", "Recompute reports from predictions");
  add_common(report_cmd, report_opts, false);

  Common sample_opts;
  std::optional<std::string> sample_dir;
  auto* sample_cmd = app.add_subcommand("sample", "Write the balanced sample of each task");
  add_common(sample_cmd, sample_opts, false);
  sample_cmd->add_option("--seed", sample_opts.seed, "Sampling seed");
  sample_cmd->add_option("--dir", sample_dir, "Target directory (default <out>/samples)");

  std::string manifest;
  auto* cost_cmd = app.add_subcommand("cost", "Call and token totals of a run");
  cost_cmd->add_option("--manifest", manifest, "manifest.json of a run")->required()->check(CLI::ExistingFile);

  Common validate_opts;
  std::string validate_version, validation_set, validate_strategy, validate_policy;
  auto* validate_cmd = app.add_subcommand("validate-prompt", "Score a validation set with a reviewed prompt");
  add_common(validate_cmd, validate_opts, true);
  validate_cmd->add_option("--version-id", validate_version, "Prompt version")->required();
  validate_cmd->add_option("--validation-set", validation_set, "Held-out responses (JSONL or CSV)")
      ->required()
      ->check(CLI::ExistingFile);
  validate_cmd->add_option("--strategy", validate_strategy, "Strategy preset (default: first configured)");
  validate_cmd->add_option("--policy", validate_policy, "Policy name (default: first configured)");

  auto* registry_cmd = app.add_subcommand("registry", "Inspect and advance prompt versions");
  registry_cmd->require_subcommand(1);
  std::string registry_dir, version_id, new_version_id, reviewer, note, task_id, components_dir;
  auto add_registry = [&](CLI::App* cmd) {
    cmd->add_option("--registry", registry_dir, "Prompt registry directory")->required();
  };
  auto* reg_list = registry_cmd->add_subcommand("list", "List versions");
  add_registry(reg_list);
  auto* reg_show = registry_cmd->add_subcommand("show", "Show one version");
  add_registry(reg_show);
  reg_show->add_option("version", version_id)->required();
  auto* reg_add = registry_cmd->add_subcommand("add", "Register a new Draft from a component directory");
  add_registry(reg_add);
  reg_add->add_option("--task", task_id)->required();
  reg_add->add_option("--version-id", version_id)->required();
  reg_add->add_option("--from", components_dir)->required()->check(CLI::ExistingDirectory);
  reg_add->add_option("--author", reviewer)->required();
  auto* reg_review = registry_cmd->add_subcommand("review", "Draft -> Reviewed");
  auto* reg_approve = registry_cmd->add_subcommand("approve", "Reviewed -> Validated -> Final");
  for (auto* cmd : {reg_review, reg_approve}) {
    add_registry(cmd);
    cmd->add_option("version", version_id)->required();
    cmd->add_option("--reviewer", reviewer)->required();
    cmd->add_option("--note", note);
  }
  auto* reg_revise = registry_cmd->add_subcommand("revise", "Copy a version into a new Draft");
  add_registry(reg_revise);
  reg_revise->add_option("version", version_id)->required();
  reg_revise->add_option("--new-version-id", new_version_id)->required();
  reg_revise->add_option("--reviewer", reviewer)->required();
  reg_revise->add_option("--note", note);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : as_exit_code(AS_E_CONFIG);
  }
  if (quiet) as_set_log_callback(quiet_logger, nullptr);

  Session session;
  if (run_cmd->parsed()) {
    if (auto st = open_session(run_opts, session); st != AS_OK) return report_failure(st);
    int exit_code = 0;
    Owned summary;
    if (auto st = as_run(session.get(), &exit_code, &summary.ptr); st != AS_OK) return report_failure(st);
    std::cout << summary.str();
    if (exit_code != 0) std::cerr << "failures exceed the configured tolerance\n";
    return exit_code;
  }
  if (report_cmd->parsed()) {
    if (auto st = open_session(report_opts, session); st != AS_OK) return report_failure(st);
    if (auto st = as_report(session.get()); st != AS_OK) return report_failure(st);
    return 0;
  }
  if (sample_cmd->parsed()) {
    if (auto st = open_session(sample_opts, session); st != AS_OK) return report_failure(st);
    if (auto st = as_sample(session.get(), sample_dir ? sample_dir->c_str() : nullptr); st != AS_OK) {
      return report_failure(st);
    }
    return 0;
  }
  if (cost_cmd->parsed()) {
    Owned table;
    if (auto st = as_cost(manifest.c_str(), &table.ptr); st != AS_OK) return report_failure(st);
    std::cout << table.str();
    return 0;
  }
  if (validate_cmd->parsed()) {
    if (auto st = open_session(validate_opts, session); st != AS_OK) return report_failure(st);
    Owned result;
    const auto st = as_validate_prompt(session.get(), validate_version.c_str(), validation_set.c_str(),
                                       validate_strategy.empty() ? nullptr : validate_strategy.c_str(),
                                       validate_policy.empty() ? nullptr : validate_policy.c_str(), &result.ptr);
    if (st != AS_OK) return report_failure(st);
    std::cout << result.str() << '\n';
    return 0;
  }

  const char* note_arg = note.empty() ? nullptr : note.c_str();
  as_status st = AS_OK;
  Owned text;
  if (reg_list->parsed()) {
    st = as_registry_list(registry_dir.c_str(), &text.ptr);
  } else if (reg_show->parsed()) {
    st = as_registry_show(registry_dir.c_str(), version_id.c_str(), &text.ptr);
  } else if (reg_add->parsed()) {
    st = as_registry_add(registry_dir.c_str(), task_id.c_str(), version_id.c_str(), components_dir.c_str(),
                         reviewer.c_str());
  } else if (reg_review->parsed()) {
    st = as_registry_review(registry_dir.c_str(), version_id.c_str(), reviewer.c_str(), note_arg);
  } else if (reg_approve->parsed()) {
    st = as_registry_approve(registry_dir.c_str(), version_id.c_str(), reviewer.c_str(), note_arg);
  } else if (reg_revise->parsed()) {
    st = as_registry_revise(registry_dir.c_str(), version_id.c_str(), new_version_id.c_str(), reviewer.c_str(),
                            note_arg);
  }
  if (st != AS_OK) return report_failure(st);
  if (text.ptr) std::cout << text.str() << '\n';
  return 0;
}
