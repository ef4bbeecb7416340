#include "autoscore/autoscore.h"

#include <cstdlib>
#include <cstring>
#include <mutex>

#include "autoscore/common.hpp"
#include "autoscore/error.hpp"
#include "autoscore/extraction.hpp"
#include "autoscore/runner.hpp"

struct as_session {
  autoscore::ExperimentConfig config;
};

namespace {

using namespace autoscore;
using nlohmann::json;

static_assert(AS_E_IO == static_cast<int>(ErrorCode::IoError) + 1, "status codes follow ErrorCode order");

thread_local std::string g_last_error;

as_status status_of(ErrorCode code) { return static_cast<as_status>(static_cast<int>(code) + 1); }

as_status fail(as_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename F>
as_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return AS_OK;
  } catch (const Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(AS_E_INTERNAL, "out of memory");
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(AS_E_IO, e.what());
  } catch (const std::exception& e) {
    return fail(AS_E_INTERNAL, e.what());
  }
}

void require(const void* p, const char* name) {
  if (!p) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must not be null");
}

char* dup_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

std::string opt(const char* s) { return s ? std::string(s) : std::string(); }

Scale scale_arg(const char* name) {
  require(name, "scale");
  const auto s = parse_scale(name);
  if (!s) throw Error(ErrorCode::InvalidArgument, std::string("unknown scale '") + name + "'");
  return *s;
}

ConfusionMatrix matrix_arg(const std::uint64_t* counts, std::size_t k) {
  require(counts, "counts");
  if (k != 2 && k != 3) throw Error(ErrorCode::InvalidArgument, "k must be 2 or 3");
  std::vector<std::vector<std::uint64_t>> rows(k, std::vector<std::uint64_t>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) rows[i][j] = counts[i * k + j];
  }
  return ConfusionMatrix::from_counts(k == 2 ? Scale::binomial() : Scale::trinomial(), rows);
}

json messages_json(const MessageSequence& seq) {
  json out = json::array();
  for (const auto& m : seq.messages) out.push_back({{"role", std::string(role_name(m.role))}, {"content", m.content}});
  return out;
}

json metrics_json(const MetricsReport& m) {
  json cats = json::object();
  for (auto label : kAllLabels) {
    const auto& v = m.category_accuracy[label_rank(label)];
    cats[std::string(label_name(label))] = v ? json(*v) : json();
  }
  return {{"task_id", m.task_id},
          {"sampled", m.sampled},
          {"scored", m.scored},
          {"failed", m.failed},
          {"accuracy", m.accuracy ? json(*m.accuracy) : json()},
          {"category_accuracy", cats},
          {"macro_recall", m.prf ? json(m.prf->macro_recall) : json()},
          {"qwk", m.qwk ? json(*m.qwk) : json()}};
}

std::mutex g_log_mutex;

}  // namespace

extern "C" {

const char* as_version(void) { return AUTOSCORE_VERSION; }

const char* as_status_name(as_status status) {
  if (status == AS_OK) return "Ok";
  if (status == AS_E_INTERNAL) return "Internal";
  if (status >= AS_E_INVALID_ARGUMENT && status <= AS_E_IO) {
    return error_code_name(static_cast<ErrorCode>(status - 1)).data();
  }
  return "Unknown";
}

const char* as_last_error(void) { return g_last_error.c_str(); }

void as_string_free(char* s) { std::free(s); }

int as_exit_code(as_status status) {
  if (status == AS_OK) return kExitOk;
  if (status >= AS_E_INVALID_ARGUMENT && status <= AS_E_IO) return exit_code_for(static_cast<ErrorCode>(status - 1));
  return kExitOther;
}

void as_set_log_callback(as_log_fn fn, void* user) {
  std::lock_guard lock(g_log_mutex);
  if (!fn) {
    set_log_sink(nullptr);
    return;
  }
  set_log_sink([fn, user](LogLevel level, std::string_view message) {
    const std::string text(message);
    fn(static_cast<int>(level), text.c_str(), user);
  });
}

as_status as_session_open(const char* config_path, as_session** out) {
  return guarded([&] {
    require(config_path, "config_path");
    require(out, "out");
    *out = nullptr;
    auto session = std::make_unique<as_session>(as_session{ExperimentConfig::load(config_path)});
    *out = session.release();
  });
}

void as_session_close(as_session* session) { delete session; }

as_status as_session_set_mode(as_session* session, const char* mode) {
  return guarded([&] {
    require(session, "session");
    require(mode, "mode");
    const auto m = parse_gateway_mode(mode);
    if (!m) throw Error(ErrorCode::ConfigError, std::string("unknown mode '") + mode + "'");
    RunOverrides overrides;
    overrides.mode = *m;
    overrides.apply(session->config);
  });
}

as_status as_session_set_seed(as_session* session, uint64_t seed) {
  return guarded([&] {
    require(session, "session");
    RunOverrides overrides;
    overrides.seed = seed;
    overrides.apply(session->config);
  });
}

as_status as_session_set_output_dir(as_session* session, const char* dir) {
  return guarded([&] {
    require(session, "session");
    require(dir, "dir");
    RunOverrides overrides;
    overrides.output_dir = std::filesystem::path(dir);
    overrides.apply(session->config);
  });
}

as_status as_session_set_parallelism(as_session* session, size_t parallelism) {
  return guarded([&] {
    require(session, "session");
    RunOverrides overrides;
    overrides.parallelism = parallelism;
    overrides.apply(session->config);
  });
}

as_status as_session_config_json(const as_session* session, char** out) {
  return guarded([&] {
    require(session, "session");
    require(out, "out");
    *out = dup_string(session->config.to_json().dump(2));
  });
}

as_status as_run(as_session* session, int* exit_code, char** summary) {
  return guarded([&] {
    require(session, "session");
    const auto result = run(session->config);
    if (exit_code) *exit_code = result.exit_code;
    if (summary) *summary = dup_string(result.summary);
  });
}

as_status as_report(as_session* session) {
  return guarded([&] {
    require(session, "session");
    write_reports(session->config);
  });
}

as_status as_sample(as_session* session, const char* dir) {
  return guarded([&] {
    require(session, "session");
    std::optional<std::filesystem::path> target;
    if (dir) target = dir;
    write_samples(session->config, target);
  });
}

as_status as_validate_prompt(as_session* session, const char* version_id, const char* validation_set,
                             const char* strategy, const char* policy, char** result_json) {
  return guarded([&] {
    require(session, "session");
    require(version_id, "version_id");
    require(validation_set, "validation_set");
    const auto outcome = validate_prompt(session->config, version_id, validation_set, opt(strategy), opt(policy));
    if (result_json) {
      const json doc = {{"run_id", outcome.record.run_id},
                        {"strategy", outcome.record.strategy},
                        {"policy", outcome.record.policy},
                        {"metrics", metrics_json(outcome.metrics)}};
      *result_json = dup_string(doc.dump(2));
    }
  });
}

as_status as_cost(const char* manifest_path, char** table) {
  return guarded([&] {
    require(manifest_path, "manifest_path");
    require(table, "table");
    json manifest;
    try {
      manifest = json::parse(read_text_file(manifest_path));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, std::string(manifest_path) + ": " + e.what());
    }
    const auto rows = cost_summary(manifest);
    *table = dup_string(render_cost(rows));
  });
}

as_status as_registry_list(const char* registry_dir, char** json_out) {
  return guarded([&] {
    require(registry_dir, "registry_dir");
    require(json_out, "json_out");
    const auto reg = PromptRegistry::open(registry_dir);
    json list = json::array();
    for (const auto& e : reg.entries()) {
      list.push_back({{"version_id", e.version_id},
                      {"task_id", e.task_id},
                      {"status", std::string(prompt_status_name(e.status))},
                      {"parent", e.parent ? json(*e.parent) : json()}});
    }
    *json_out = dup_string(list.dump(2));
  });
}

as_status as_registry_show(const char* registry_dir, const char* version_id, char** json_out) {
  return guarded([&] {
    require(registry_dir, "registry_dir");
    require(version_id, "version_id");
    require(json_out, "json_out");
    const auto reg = PromptRegistry::open(registry_dir);
    *json_out = dup_string(reg.get(version_id).to_json().dump(2));
  });
}

as_status as_registry_add(const char* registry_dir, const char* task_id, const char* version_id,
                          const char* components_dir, const char* author) {
  return guarded([&] {
    require(registry_dir, "registry_dir");
    require(task_id, "task_id");
    require(version_id, "version_id");
    require(components_dir, "components_dir");
    auto reg = PromptRegistry::open(registry_dir);
    reg.add(task_id, version_id, load_components(components_dir), opt(author));
    reg.save();
  });
}

as_status as_registry_review(const char* registry_dir, const char* version_id, const char* reviewer,
                             const char* note) {
  return guarded([&] {
    require(registry_dir, "registry_dir");
    require(version_id, "version_id");
    auto reg = PromptRegistry::open(registry_dir);
    reg.review(version_id, opt(reviewer), opt(note));
    reg.save();
  });
}

as_status as_registry_approve(const char* registry_dir, const char* version_id, const char* reviewer,
                              const char* note) {
  return guarded([&] {
    require(registry_dir, "registry_dir");
    require(version_id, "version_id");
    auto reg = PromptRegistry::open(registry_dir);
    reg.approve(version_id, opt(reviewer), opt(note));
    reg.save();
  });
}

as_status as_registry_revise(const char* registry_dir, const char* version_id, const char* new_version_id,
                             const char* reviewer, const char* note) {
  return guarded([&] {
    require(registry_dir, "registry_dir");
    require(version_id, "version_id");
    require(new_version_id, "new_version_id");
    auto reg = PromptRegistry::open(registry_dir);
    reg.revise(version_id, new_version_id, opt(reviewer), opt(note));
    reg.save();
  });
}

as_status as_extract_rating(const char* reply, const char* scale, int* label_rank) {
  return guarded([&] {
    require(reply, "reply");
    require(label_rank, "label_rank");
    const auto result = extract_rating(reply, scale_arg(scale));
    *label_rank = static_cast<int>(autoscore::label_rank(result.label));
  });
}

as_status as_majority_vote(const int labels[3], int* label_rank) {
  return guarded([&] {
    require(labels, "labels");
    require(label_rank, "label_rank");
    std::array<ProficiencyLabel, 3> votes{};
    for (int i = 0; i < 3; ++i) {
      if (labels[i] < AS_BEGINNING || labels[i] > AS_PROFICIENT) {
        throw Error(ErrorCode::InvalidArgument, "label rank out of range");
      }
      votes[i] = static_cast<ProficiencyLabel>(labels[i]);
    }
    const auto winner = majority_vote(votes);
    *label_rank = winner ? static_cast<int>(autoscore::label_rank(*winner)) : AS_NO_MAJORITY;
  });
}

as_status as_qwk(const uint64_t* counts, size_t k, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = qwk(matrix_arg(counts, k));
  });
}

as_status as_accuracy(const uint64_t* counts, size_t k, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = accuracy(matrix_arg(counts, k));
  });
}

as_status as_assemble_prompt(const char* task_path, const char* components_dir, const char* strategy,
                             const char* response_text, char** json_out) {
  return guarded([&] {
    require(task_path, "task_path");
    require(components_dir, "components_dir");
    require(strategy, "strategy");
    require(response_text, "response_text");
    require(json_out, "json_out");
    const auto task = load_task(task_path);
    const auto components = load_components(components_dir);
    const auto seq = assemble(preset(strategy), task, components, StudentResponse{"adhoc", response_text});
    *json_out = dup_string(messages_json(seq).dump(2));
  });
}

}  // extern "C"
