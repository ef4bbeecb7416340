#include "autoscore/runner.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include "autoscore/common.hpp"
#include "autoscore/error.hpp"

#ifndef AUTOSCORE_VERSION
#define AUTOSCORE_VERSION "0.0.0"
#endif

namespace autoscore {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::CacheMiss:
      return kExitCacheMiss;
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidComponent:
    case ErrorCode::MissingComponent:
    case ErrorCode::UnknownPreset:
    case ErrorCode::AuthError:
    case ErrorCode::ParseError:
    case ErrorCode::UnknownLabel:
    case ErrorCode::DuplicateResponseId:
    case ErrorCode::ConfigError:
    case ErrorCode::OverlapError:
    case ErrorCode::InvalidTransition:
    case ErrorCode::NotFound:
      return kExitConfig;
    default:
      return kExitOther;
  }
}

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

fs::path predictions_path(const ExperimentConfig& c, const std::string& policy, const std::string& strategy,
                          const std::string& task) {
  return c.output_dir / "predictions" / policy / strategy / (task + ".jsonl");
}

bool overlaps(std::span<const GoldLabeledResponse> a, std::span<const GoldLabeledResponse> b) {
  std::set<std::string_view> ids;
  std::set<std::string_view> texts;
  for (const auto& r : a) {
    ids.insert(r.response.id);
    texts.insert(r.response.text);
  }
  return std::any_of(b.begin(), b.end(), [&](const GoldLabeledResponse& r) {
    return ids.contains(r.response.id) || texts.contains(r.response.text);
  });
}

std::map<std::string, ScoringTask, std::less<>> load_configured_tasks(const ExperimentConfig& config) {
  std::map<std::string, ScoringTask, std::less<>> tasks;
  for (const auto& id : config.tasks) tasks.emplace(id, load_task_file(config, id));
  return tasks;
}

struct Resolved {
  std::string version;
  PromptStatus status;
  PromptComponentSet components;
};

Resolved resolve_prompt(const PromptRegistry& registry, const ExperimentConfig& config, const ScoringTask& task) {
  const PromptRegistryEntry* entry = nullptr;
  if (const auto it = config.prompt_versions.find(task.id); it != config.prompt_versions.end()) {
    try {
      entry = &registry.get(it->second);
    } catch (const Error& e) {
      config_error(e.what());
    }
    if (entry->task_id != task.id) {
      config_error("prompt version " + entry->version_id + " belongs to task " + entry->task_id);
    }
  } else {
    entry = registry.latest_final(task.id);
    if (!entry && !is_network_mode(config.gateway.mode)) entry = registry.latest(task.id);
  }
  if (!entry) config_error("no usable prompt version for task " + task.id);
  if (is_network_mode(config.gateway.mode) && entry->status != PromptStatus::Final) {
    config_error("prompt version " + entry->version_id + " is " + std::string(prompt_status_name(entry->status)) +
                 "; live and record runs need a Final version");
  }
  registry.verify_immutable(entry->version_id);
  auto components = registry.components(entry->version_id);
  try {
    components.validate(task.scale);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, "prompt version " + entry->version_id + ": " + e.what());
  }
  return {entry->version_id, entry->status, std::move(components)};
}

json score_to_json(const std::string& task_id, const GoldLabeledResponse& gold, const ResponseScore& s) {
  json votes = json::array();
  for (auto v : s.votes) votes.push_back(std::string(label_name(v)));
  json failure;
  if (s.failure) {
    failure = {{"code", std::string(error_code_name(s.failure->code))}, {"message", s.failure->message}};
  }
  return {{"task_id", task_id},
          {"response_id", s.response_id},
          {"gold", std::string(label_name(gold.gold))},
          {"predicted", s.predicted ? json(std::string(label_name(*s.predicted))) : json()},
          {"votes", votes},
          {"tiebreak_used", s.tiebreak_used},
          {"transcripts", s.transcripts},
          {"failure", failure}};
}

std::shared_ptr<Gateway> make_gateway(const ExperimentConfig& config, std::shared_ptr<Transport> transport) {
  std::shared_ptr<TranscriptStore> store;
  if (config.gateway.mode != GatewayMode::Live) {
    store = std::make_shared<TranscriptStore>(config.gateway.transcripts);
  }
  if (!transport && config.gateway.mode != GatewayMode::ReplayStrict) transport = std::make_shared<HttpTransport>();
  std::shared_ptr<RateLimiter> limiter;
  if (config.gateway.rate_per_second) {
    limiter = std::make_shared<RateLimiter>(*config.gateway.rate_per_second, *config.gateway.rate_per_second);
  }
  RetryPolicy retry;
  retry.max_attempts = config.gateway.max_attempts;
  retry.initial_backoff = config.gateway.backoff;
  return std::make_shared<Gateway>(std::move(transport), std::move(store), retry, std::move(limiter));
}

void require_credentials(const ExperimentConfig& config) {
  if (!is_network_mode(config.gateway.mode)) return;
  for (const auto& p : config.policies) {
    const char* value = std::getenv(p.model.api_key_env.c_str());
    if (!value || !*value) {
      config_error("policy " + p.name + ": environment variable " + p.model.api_key_env + " is not set");
    }
  }
}

GridLayout layout_of(const ExperimentConfig& config) {
  GridLayout layout{config.tasks, config.strategies, {}};
  for (const auto& p : config.policies) layout.policies.push_back(p.name);
  return layout;
}

std::string relative_name(const fs::path& path, const fs::path& base) {
  return path.lexically_relative(base).generic_string();
}

}  // namespace

ScoringTask load_task_file(const ExperimentConfig& config, const std::string& task_id) {
  const auto path = config.task_dir / (task_id + ".json");
  if (!fs::exists(path)) config_error("task file " + path.string() + " does not exist");
  auto task = load_task(path);
  if (task.id != task_id) config_error(path.string() + " defines task " + task.id + ", expected " + task_id);
  return task;
}

PreparedExperiment prepare(const ExperimentConfig& config, bool check_credentials) {
  config.validate();
  if (check_credentials) require_credentials(config);
  auto tasks = load_configured_tasks(config);
  if (!fs::is_directory(config.prompt_registry)) {
    config_error("prompt registry " + config.prompt_registry.string() + " does not exist");
  }
  const auto registry = PromptRegistry::open(config.prompt_registry);
  if (!fs::exists(config.dataset)) config_error("dataset " + config.dataset.string() + " does not exist");
  const auto pool = ingest(config.dataset, config.dataset_format, &tasks);

  PreparedExperiment out{config, {}};
  for (const auto& id : config.tasks) {
    const auto& task = tasks.at(id);
    auto prompt = resolve_prompt(registry, config, task);
    if (!pool.has_task(id)) config_error("dataset has no responses for task " + id);
    auto sample = balanced_sample(pool, task, config.sample);
    if (sample.empty()) config_error("balanced sample for task " + id + " is empty");
    if (!check_disjoint(prompt.components, sample)) {
      throw Error(ErrorCode::OverlapError, "few-shot exemplars of " + prompt.version + " overlap the test sample of " + id);
    }
    for (const auto& name : config.strategies) {
      const auto strategy = preset(name);
      try {
        (void)assemble(strategy, task, prompt.components, sample.front().response);
      } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, "task " + id + ", strategy " + name + ": " + e.what());
      }
    }
    out.tasks.push_back(PreparedTask{task, prompt.version, prompt.status, std::move(prompt.components), std::move(sample)});
  }
  return out;
}

std::size_t count_calls(std::span<const ResponseScore> scores) noexcept {
  std::size_t n = 0;
  for (const auto& s : scores) n += s.transcripts.size();
  return n;
}

std::vector<fs::path> write_samples(const ExperimentConfig& config, const std::optional<fs::path>& dir) {
  auto tasks = load_configured_tasks(config);
  if (!fs::exists(config.dataset)) config_error("dataset " + config.dataset.string() + " does not exist");
  const auto pool = ingest(config.dataset, config.dataset_format, &tasks);
  const auto target = dir.value_or(config.output_dir / "samples");
  std::vector<fs::path> written;
  for (const auto& id : config.tasks) {
    if (!pool.has_task(id)) config_error("dataset has no responses for task " + id);
    const auto path = target / (id + ".jsonl");
    write_text_file(path, sample_to_jsonl(id, balanced_sample(pool, tasks.at(id), config.sample)));
    written.push_back(path);
  }
  return written;
}

RunResult run(const ExperimentConfig& config, std::shared_ptr<Transport> transport) {
  const auto started = utc_timestamp();
  const auto prepared = prepare(config, transport == nullptr);
  auto gateway = make_gateway(config, transport);

  fs::create_directories(config.output_dir);
  json outputs = json::object();
  auto record_output = [&](const fs::path& path) {
    outputs[relative_name(path, config.output_dir)] = sha256_file(path);
  };

  for (const auto& t : prepared.tasks) {
    const auto path = config.output_dir / "samples" / (t.task.id + ".jsonl");
    write_text_file(path, sample_to_jsonl(t.task.id, t.sample));
    record_output(path);
  }

  json cells = json::array();
  for (const auto& policy : config.policies) {
    for (const auto& strategy_name : config.strategies) {
      const auto strategy = preset(strategy_name);
      for (const auto& t : prepared.tasks) {
        std::vector<StudentResponse> responses;
        std::map<std::string_view, const GoldLabeledResponse*> gold;
        for (const auto& g : t.sample) {
          responses.push_back(g.response);
          gold.emplace(g.response.id, &g);
        }
        const ScoringContext ctx{t.task, strategy, policy.policy, t.components, policy.model, *gateway,
                                 config.gateway.mode};
        log_info("scoring " + t.task.id + " / " + strategy_name + " / " + policy.name);
        const auto scores = score_all(ctx, responses, config.parallelism);

        std::string lines;
        std::size_t failed = 0;
        std::size_t tiebreaks = 0;
        std::int64_t prompt_tokens = 0;
        std::int64_t completion_tokens = 0;
        for (const auto& s : scores) {
          lines += score_to_json(t.task.id, *gold.at(s.response_id), s).dump() + "\n";
          if (s.failure) ++failed;
          if (s.tiebreak_used) ++tiebreaks;
          prompt_tokens += s.usage.prompt_tokens;
          completion_tokens += s.usage.completion_tokens;
        }
        const auto path = predictions_path(config, policy.name, strategy_name, t.task.id);
        write_text_file(path, lines);
        record_output(path);
        cells.push_back({{"task", t.task.id},
                         {"strategy", strategy_name},
                         {"policy", policy.name},
                         {"model_id", policy.model.model_id},
                         {"prompt_version", t.prompt_version},
                         {"responses", scores.size()},
                         {"failed", failed},
                         {"calls", count_calls(scores)},
                         {"tiebreaks", tiebreaks},
                         {"prompt_tokens", prompt_tokens},
                         {"completion_tokens", completion_tokens}});
      }
    }
  }

  RunResult result;
  result.cells = write_reports(config);
  for (const auto& entry : fs::recursive_directory_iterator(config.output_dir / "reports")) {
    if (entry.is_regular_file()) record_output(entry.path());
  }

  std::ostringstream summary;
  for (const auto& cell : result.cells) {
    const auto& m = cell.metrics;
    if (m.failed == 0) continue;
    const double fraction = m.sampled ? static_cast<double>(m.failed) / static_cast<double>(m.sampled) : 0.0;
    summary << cell.task_id << " / " << cell.strategy << " / " << cell.policy << ": " << m.failed << " of "
            << m.sampled << " responses failed\n";
    if (fraction > config.failure_tolerance) result.exit_code = kExitFailures;
  }
  result.summary = summary.str();

  json prompt_versions = json::object();
  for (const auto& t : prepared.tasks) {
    prompt_versions[t.task.id] = {{"version", t.prompt_version},
                                  {"status", std::string(prompt_status_name(t.prompt_status))}};
  }
  result.manifest = {{"tool", "autoscore"},
                     {"tool_version", AUTOSCORE_VERSION},
                     {"started", started},
                     {"finished", utc_timestamp()},
                     {"seed", config.sample.seed},
                     {"mode", std::string(gateway_mode_name(config.gateway.mode))},
                     {"config", config.to_json()},
                     {"prompt_versions", prompt_versions},
                     {"transcripts", config.gateway.transcripts.generic_string()},
                     {"transport_calls", gateway->transport_calls()},
                     {"cells", cells},
                     {"outputs", outputs},
                     {"exit_code", result.exit_code}};
  write_text_file(config.output_dir / "manifest.json", result.manifest.dump(2) + "\n");
  return result;
}

std::vector<CellResult> write_reports(const ExperimentConfig& config) {
  const auto tasks = load_configured_tasks(config);
  const auto layout = layout_of(config);
  std::vector<CellResult> cells;
  for (const auto& policy : layout.policies) {
    for (const auto& strategy : layout.strategies) {
      for (const auto& task_id : layout.tasks) {
        const auto& task = tasks.at(task_id);
        const auto path = predictions_path(config, policy, strategy, task_id);
        if (!fs::exists(path)) {
          throw Error(ErrorCode::NotFound, "missing predictions file " + path.string());
        }
        ConfusionMatrix cm(task.scale);
        std::size_t sampled = 0;
        std::size_t failed = 0;
        std::istringstream in(read_text_file(path));
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
          ++line_no;
          if (trim(line).empty()) continue;
          try {
            const auto doc = json::parse(line);
            ++sampled;
            const auto gold = parse_label(doc.at("gold").get<std::string>());
            if (!gold) throw Error(ErrorCode::UnknownLabel, "unknown gold label");
            if (!doc.at("failure").is_null() || doc.at("predicted").is_null()) {
              ++failed;
              continue;
            }
            const auto predicted = parse_label(doc.at("predicted").get<std::string>());
            if (!predicted) throw Error(ErrorCode::UnknownLabel, "unknown predicted label");
            cm.add(*gold, *predicted);
          } catch (const std::exception& e) {
            throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
          }
        }
        cells.push_back({task_id, strategy, policy, evaluate(task_id, cm, sampled, failed)});
      }
    }
  }

  const auto dir = config.output_dir / "reports";
  write_text_file(dir / "metrics.csv", metrics_csv(cells, layout));
  for (const auto& policy : layout.policies) {
    write_text_file(dir / ("accuracy_" + policy + ".txt"), render_accuracy_table(cells, layout, policy));
    write_text_file(dir / ("category_" + policy + ".txt"), render_category_table(cells, layout, policy));
  }
  for (const auto& strategy : layout.strategies) {
    write_text_file(dir / ("policies_" + strategy + ".txt"), render_policy_table(cells, layout, strategy));
  }
  write_text_file(dir / "full_metrics.txt", render_full_metrics(cells, layout));
  return cells;
}

std::vector<CostRow> cost_summary(const json& manifest) {
  std::vector<CostRow> rows;
  if (!manifest.contains("cells")) return rows;
  for (const auto& cell : manifest.at("cells")) {
    const auto model = cell.value("model_id", std::string{});
    const auto policy = cell.value("policy", std::string{});
    auto it = std::find_if(rows.begin(), rows.end(),
                           [&](const CostRow& r) { return r.model_id == model && r.policy == policy; });
    if (it == rows.end()) {
      rows.push_back({model, policy});
      it = rows.end() - 1;
    }
    it->cells += 1;
    it->responses += cell.value("responses", std::size_t{0});
    it->calls += cell.value("calls", std::size_t{0});
    it->prompt_tokens += cell.value("prompt_tokens", std::int64_t{0});
    it->completion_tokens += cell.value("completion_tokens", std::int64_t{0});
  }
  return rows;
}

std::string render_cost(std::span<const CostRow> rows) {
  std::ostringstream out;
  out << "model\tpolicy\tcells\tresponses\tcalls\tprompt_tokens\tcompletion_tokens\n";
  CostRow total{"total", ""};
  for (const auto& r : rows) {
    out << r.model_id << '\t' << r.policy << '\t' << r.cells << '\t' << r.responses << '\t' << r.calls << '\t'
        << r.prompt_tokens << '\t' << r.completion_tokens << '\n';
    total.cells += r.cells;
    total.responses += r.responses;
    total.calls += r.calls;
    total.prompt_tokens += r.prompt_tokens;
    total.completion_tokens += r.completion_tokens;
  }
  out << "total\t\t" << total.cells << '\t' << total.responses << '\t' << total.calls << '\t' << total.prompt_tokens
      << '\t' << total.completion_tokens << '\n';
  return out.str();
}

ValidationOutcome validate_prompt(const ExperimentConfig& config, const std::string& version_id,
                                  const fs::path& validation_set, std::string strategy_name,
                                  std::string policy_name, std::shared_ptr<Transport> transport) {
  auto registry = PromptRegistry::open(config.prompt_registry);
  const auto entry = registry.get(version_id);
  if (entry.status != PromptStatus::Reviewed && entry.status != PromptStatus::Validated) {
    throw Error(ErrorCode::InvalidTransition, "prompt version " + version_id + " is " +
                                                  std::string(prompt_status_name(entry.status)) +
                                                  "; validation needs a Reviewed version");
  }
  const auto task = load_task_file(config, entry.task_id);
  const auto components = registry.components(version_id);
  components.validate(task.scale);
  if (strategy_name.empty()) strategy_name = config.strategies.front();
  if (policy_name.empty()) policy_name = config.policies.front().name;
  const auto strategy = preset(strategy_name);
  const auto& policy = config.policy(policy_name);

  std::map<std::string, ScoringTask, std::less<>> known{{task.id, task}};
  if (!fs::exists(validation_set)) config_error("validation set " + validation_set.string() + " does not exist");
  const auto vpool = ingest(validation_set, guess_pool_format(validation_set), &known);
  if (!vpool.has_task(task.id)) config_error("validation set has no responses for task " + task.id);
  const auto& vset = vpool.responses(task.id);

  if (fs::exists(config.dataset)) {
    const auto pool = ingest(config.dataset, config.dataset_format, &known);
    if (pool.has_task(task.id)) {
      const auto test = balanced_sample(pool, task, config.sample);
      if (overlaps(test, vset)) {
        throw Error(ErrorCode::OverlapError, "validation set overlaps the test sample of task " + task.id);
      }
    }
  }
  if (!check_disjoint(components, vset)) {
    throw Error(ErrorCode::OverlapError, "validation set overlaps the few-shot exemplars of " + version_id);
  }

  auto gateway = make_gateway(config, transport);
  std::vector<StudentResponse> responses;
  std::map<std::string_view, const GoldLabeledResponse*> gold;
  for (const auto& g : vset) {
    responses.push_back(g.response);
    gold.emplace(g.response.id, &g);
  }
  const ScoringContext ctx{task, strategy, policy.policy, components, policy.model, *gateway, config.gateway.mode};
  const auto scores = score_all(ctx, responses, config.parallelism);

  ConfusionMatrix cm(task.scale);
  std::size_t failed = 0;
  std::string lines;
  for (const auto& s : scores) {
    const auto& g = *gold.at(s.response_id);
    lines += score_to_json(task.id, g, s).dump() + "\n";
    if (s.predicted && !s.failure) {
      cm.add(g.gold, *s.predicted);
    } else {
      ++failed;
    }
  }
  const auto predictions = config.output_dir / "validation" / version_id / (strategy_name + "_" + policy_name + ".jsonl");
  write_text_file(predictions, lines);

  ValidationOutcome out;
  out.metrics = evaluate(task.id, cm, scores.size(), failed);
  out.record.run_id = version_id + "@" + sha256_file(predictions).substr(0, 12);
  out.record.validation_set = validation_set.generic_string();
  out.record.strategy = strategy_name;
  out.record.policy = policy_name;
  out.record.sampled = scores.size();
  out.record.scored = scores.size() - failed;
  out.record.failed = failed;
  out.record.accuracy = out.metrics.accuracy;
  out.record.timestamp = utc_timestamp();
  registry.record_validation(version_id, out.record);
  registry.save();
  return out;
}

}  // namespace autoscore
