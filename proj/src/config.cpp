#include "autoscore/config.hpp"

#include <algorithm>
#include <set>

#include "autoscore/common.hpp"
#include "autoscore/error.hpp"

namespace autoscore {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative()) path = base / path;
  return path.lexically_normal();
}

SamplingConfig sampling_from_json(const json& node, const std::string& where) {
  if (node.is_string()) {
    const auto p = parse_sampling_preset(node.get<std::string>());
    if (!p) config_error(where + ": unknown sampling preset '" + node.get<std::string>() + "'");
    return sampling_preset(*p);
  }
  if (node.is_object()) {
    SamplingConfig s;
    s.temperature = node.at("temperature").get<double>();
    s.top_p = node.at("top_p").get<double>();
    return s;
  }
  config_error(where + ": sampling must be a preset name or {temperature, top_p}");
}

json sampling_to_json(const SamplingConfig& s) { return {{"temperature", s.temperature}, {"top_p", s.top_p}}; }

PolicyConfig policy_from_json(const json& node) {
  PolicyConfig p;
  p.name = node.at("name").get<std::string>();
  const auto& m = node.at("model");
  p.model.model_id = m.at("model_id").get<std::string>();
  p.model.endpoint = m.value("endpoint", p.model.endpoint);
  p.model.api_key_env = m.value("api_key_env", p.model.api_key_env);
  p.model.max_tokens = m.value("max_tokens", p.model.max_tokens);
  p.model.timeout = std::chrono::milliseconds(
      static_cast<std::int64_t>(m.value("timeout_s", 60.0) * 1000.0));
  const int calls = node.value("calls", 1);
  const auto where = "policy " + p.name;
  if (calls == 1) {
    p.policy = ScoringPolicy::single_call(
        sampling_from_json(node.value("sampling", json("greedy")), where));
  } else if (calls == 3) {
    p.policy = ScoringPolicy::ensemble_vote(
        sampling_from_json(node.value("sampling", json("nucleus")), where));
    if (node.contains("tiebreak_sampling")) {
      p.policy.tiebreak = sampling_from_json(node.at("tiebreak_sampling"), where);
    }
  } else {
    config_error(where + ": calls must be 1 (single call) or 3 (ensemble vote)");
  }
  return p;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& doc, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  try {
    c.tasks = doc.at("tasks").get<std::vector<std::string>>();
    c.task_dir = resolve(base_dir, doc.value("task_dir", std::string("tasks")));
    c.prompt_registry = resolve(base_dir, doc.value("prompt_registry", std::string("prompts")));
    if (doc.contains("prompt_versions")) {
      for (const auto& [task, version] : doc.at("prompt_versions").items()) {
        c.prompt_versions.emplace(task, version.get<std::string>());
      }
    }
    if (doc.contains("strategies")) {
      c.strategies = doc.at("strategies").get<std::vector<std::string>>();
    } else {
      c.strategies.assign(kPresetNames.begin(), kPresetNames.end());
    }
    for (const auto& p : doc.at("policies")) c.policies.push_back(policy_from_json(p));

    const auto& ds = doc.at("dataset");
    c.dataset = resolve(base_dir, ds.at("path").get<std::string>());
    if (ds.contains("format")) {
      const auto f = parse_pool_format(ds.at("format").get<std::string>());
      if (!f) config_error("unknown dataset format " + ds.at("format").dump());
      c.dataset_format = *f;
    } else {
      c.dataset_format = guess_pool_format(c.dataset);
    }

    if (doc.contains("sample")) {
      const auto& s = doc.at("sample");
      c.sample.cap_per_label = s.value("cap_per_label", c.sample.cap_per_label);
      c.sample.seed = s.value("seed", c.sample.seed);
    }

    c.output_dir = resolve(base_dir, doc.value("output_dir", std::string("out")));
    if (doc.contains("gateway")) {
      const auto& g = doc.at("gateway");
      if (g.contains("mode")) {
        const auto m = parse_gateway_mode(g.at("mode").get<std::string>());
        if (!m) config_error("unknown gateway mode " + g.at("mode").dump());
        c.gateway.mode = *m;
      }
      if (g.contains("transcripts")) c.gateway.transcripts = resolve(base_dir, g.at("transcripts").get<std::string>());
      c.gateway.max_attempts = g.value("max_attempts", c.gateway.max_attempts);
      c.gateway.backoff = std::chrono::milliseconds(g.value("backoff_ms", std::int64_t{500}));
      if (g.contains("rate_per_second") && !g.at("rate_per_second").is_null()) {
        c.gateway.rate_per_second = g.at("rate_per_second").get<double>();
      }
    }
    if (c.gateway.transcripts.empty()) c.gateway.transcripts = c.output_dir / "transcripts.jsonl";
    c.parallelism = doc.value("parallelism", c.parallelism);
    c.failure_tolerance = doc.value("failure_tolerance", c.failure_tolerance);
  } catch (const json::exception& e) {
    config_error(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) config_error("config file " + path.string() + " does not exist");
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    config_error(path.string() + ": " + e.what());
  }
  return from_json(doc, std::filesystem::absolute(path).parent_path());
}

json ExperimentConfig::to_json() const {
  json policies_json = json::array();
  for (const auto& p : policies) {
    json node = {{"name", p.name},
                 {"model",
                  {{"model_id", p.model.model_id},
                   {"endpoint", p.model.endpoint},
                   {"api_key_env", p.model.api_key_env},
                   {"max_tokens", p.model.max_tokens},
                   {"timeout_s", static_cast<double>(p.model.timeout.count()) / 1000.0}}},
                 {"calls", p.policy.n_calls},
                 {"sampling", sampling_to_json(p.policy.sampling)}};
    if (p.policy.kind == PolicyKind::EnsembleVote) node["tiebreak_sampling"] = sampling_to_json(p.policy.tiebreak);
    policies_json.push_back(std::move(node));
  }
  json versions = json::object();
  for (const auto& [t, v] : prompt_versions) versions[t] = v;
  json gateway_json = {{"mode", std::string(gateway_mode_name(gateway.mode))},
                       {"transcripts", gateway.transcripts.generic_string()},
                       {"max_attempts", gateway.max_attempts},
                       {"backoff_ms", gateway.backoff.count()},
                       {"rate_per_second", gateway.rate_per_second ? json(*gateway.rate_per_second) : json()}};
  return {{"tasks", tasks},
          {"task_dir", task_dir.generic_string()},
          {"prompt_registry", prompt_registry.generic_string()},
          {"prompt_versions", versions},
          {"strategies", strategies},
          {"policies", policies_json},
          {"dataset", {{"path", dataset.generic_string()}, {"format", dataset_format == PoolFormat::Csv ? "csv" : "jsonl"}}},
          {"sample", {{"cap_per_label", sample.cap_per_label}, {"seed", sample.seed}}},
          {"gateway", gateway_json},
          {"parallelism", parallelism},
          {"output_dir", output_dir.generic_string()},
          {"failure_tolerance", failure_tolerance}};
}

void ExperimentConfig::validate() const {
  if (tasks.empty()) config_error("no tasks configured");
  std::set<std::string_view> seen;
  for (const auto& t : tasks) {
    if (t.empty() || !seen.insert(t).second) config_error("task ids must be non-empty and unique");
  }
  if (strategies.empty()) config_error("no strategies configured");
  seen.clear();
  for (const auto& s : strategies) {
    try {
      preset(s);
    } catch (const Error& e) {
      config_error(e.what());
    }
    if (!seen.insert(s).second) config_error("strategy " + s + " listed twice");
  }
  if (policies.empty()) config_error("no policies configured");
  seen.clear();
  for (const auto& p : policies) {
    if (p.name.empty() || !seen.insert(p.name).second) config_error("policy names must be non-empty and unique");
    if (p.name.find_first_of("/\\") != std::string::npos) config_error("policy name " + p.name + " contains a path separator");
    if (p.model.model_id.empty()) config_error("policy " + p.name + " has no model_id");
    if (p.model.max_tokens <= 0) config_error("policy " + p.name + ": max_tokens must be positive");
    try {
      p.policy.validate();
    } catch (const Error& e) {
      config_error("policy " + p.name + ": " + e.what());
    }
  }
  for (const auto& [task, version] : prompt_versions) {
    if (std::find(tasks.begin(), tasks.end(), task) == tasks.end()) {
      config_error("prompt_versions names task " + task + " which is not configured");
    }
    if (version.empty()) config_error("empty prompt version for task " + task);
  }
  if (sample.cap_per_label == 0) config_error("sample.cap_per_label must be positive");
  if (parallelism == 0) config_error("parallelism must be at least 1");
  if (gateway.max_attempts < 1) config_error("gateway.max_attempts must be at least 1");
  if (gateway.backoff.count() < 0) config_error("gateway.backoff_ms must be non-negative");
  if (gateway.rate_per_second && !(*gateway.rate_per_second > 0.0)) config_error("gateway.rate_per_second must be positive");
  if (!(failure_tolerance >= 0.0 && failure_tolerance <= 1.0)) config_error("failure_tolerance must lie in [0, 1]");
}

const PolicyConfig& ExperimentConfig::policy(std::string_view name) const {
  for (const auto& p : policies) {
    if (p.name == name) return p;
  }
  config_error("no policy named '" + std::string(name) + "'");
}

void RunOverrides::apply(ExperimentConfig& config) const {
  if (mode) config.gateway.mode = *mode;
  if (seed) config.sample.seed = *seed;
  if (output_dir) {
    const bool default_transcripts = config.gateway.transcripts == config.output_dir / "transcripts.jsonl";
    config.output_dir = std::filesystem::absolute(*output_dir).lexically_normal();
    if (default_transcripts) config.gateway.transcripts = config.output_dir / "transcripts.jsonl";
  }
  if (parallelism) config.parallelism = *parallelism;
  config.validate();
}

}  // namespace autoscore
