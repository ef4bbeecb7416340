#include "autoscore/dataset.hpp"

#include <algorithm>

#include <json.hpp>

#include "autoscore/common.hpp"
#include "autoscore/error.hpp"

namespace autoscore {

void ResponsePool::add(const std::string& task_id, GoldLabeledResponse item) {
  auto& list = by_task_[task_id];
  for (const auto& existing : list) {
    if (existing.response.id == item.response.id) {
      throw Error(ErrorCode::DuplicateResponseId,
                  "task " + task_id + ": duplicate response id '" + item.response.id + "'");
    }
  }
  list.push_back(std::move(item));
}

bool ResponsePool::has_task(std::string_view task_id) const { return by_task_.find(task_id) != by_task_.end(); }

const std::vector<GoldLabeledResponse>& ResponsePool::responses(std::string_view task_id) const {
  const auto it = by_task_.find(task_id);
  if (it == by_task_.end()) throw Error(ErrorCode::NotFound, "pool has no task " + std::string(task_id));
  return it->second;
}

std::vector<std::string> ResponsePool::task_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : by_task_) out.push_back(id);
  return out;
}

std::size_t ResponsePool::size() const noexcept {
  std::size_t n = 0;
  for (const auto& [_, list] : by_task_) n += list.size();
  return n;
}

std::optional<PoolFormat> parse_pool_format(std::string_view name) noexcept {
  const auto lowered = to_lower_ascii(name);
  if (lowered == "jsonl") return PoolFormat::Jsonl;
  if (lowered == "csv") return PoolFormat::Csv;
  return std::nullopt;
}

PoolFormat guess_pool_format(const std::filesystem::path& path) noexcept {
  return to_lower_ascii(path.extension().string()) == ".csv" ? PoolFormat::Csv : PoolFormat::Jsonl;
}

namespace {

struct Row {
  std::size_t line;
  std::string task_id;
  std::string response_id;
  std::string text;
  std::string gold_label;
};

[[noreturn]] void parse_error(std::string_view source, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, std::string(source) + ":" + std::to_string(line) + ": " + what);
}

std::vector<Row> read_jsonl(std::string_view contents, std::string_view source) {
  std::vector<Row> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= contents.size()) {
    auto end = contents.find('\n', pos);
    if (end == std::string_view::npos) end = contents.size();
    const auto line = contents.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (trim(line).empty()) {
      if (end == contents.size()) break;
      continue;
    }
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      parse_error(source, line_no, e.what());
    }
    Row row{line_no, {}, {}, {}, {}};
    for (auto [field, target] : {std::pair{"task_id", &row.task_id}, std::pair{"response_id", &row.response_id},
                                 std::pair{"text", &row.text}, std::pair{"gold_label", &row.gold_label}}) {
      if (!doc.is_object() || !doc.contains(field) || !doc.at(field).is_string()) {
        parse_error(source, line_no, std::string("missing string field '") + field + "'");
      }
      *target = doc.at(field).get<std::string>();
    }
    rows.push_back(std::move(row));
    if (end == contents.size()) break;
  }
  return rows;
}

// RFC 4180: quoted fields may contain separators, doubled quotes and line
// breaks. Returns records together with the line each one starts on.
std::vector<std::pair<std::size_t, std::vector<std::string>>> split_csv(std::string_view contents,
                                                                         std::string_view source) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> records;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t record_line = 1;

  auto end_field = [&] {
    fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(fields.size() == 1 && fields[0].empty())) records.emplace_back(record_line, std::move(fields));
    fields.clear();
  };

  for (std::size_t i = 0; i < contents.size(); ++i) {
    const char c = contents[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < contents.size() && contents[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' && i + 1 < contents.size() && contents[i + 1] == '\n') {
      continue;
    } else if (c == '\n') {
      end_record();
      ++line;
      record_line = line;
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (quoted) parse_error(source, record_line, "unterminated quoted field");
  if (field_started || !fields.empty()) end_record();
  return records;
}

std::vector<Row> read_csv(std::string_view contents, std::string_view source) {
  auto records = split_csv(contents, source);
  if (records.empty()) return {};
  const auto& header = records.front().second;
  auto column = [&](std::string_view name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    parse_error(source, records.front().first, "missing column '" + std::string(name) + "'");
  };
  const auto c_task = column("task_id");
  const auto c_resp = column("response_id");
  const auto c_text = column("text");
  const auto c_gold = column("gold_label");
  const auto needed = std::max({c_task, c_resp, c_text, c_gold}) + 1;

  std::vector<Row> rows;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& [line, fields] = records[r];
    if (fields.size() < needed) {
      parse_error(source, line, "expected at least " + std::to_string(needed) + " fields, found " +
                                    std::to_string(fields.size()));
    }
    rows.push_back({line, fields[c_task], fields[c_resp], fields[c_text], fields[c_gold]});
  }
  return rows;
}

}  // namespace

ResponsePool ingest_string(std::string_view contents, PoolFormat format,
                           const std::map<std::string, ScoringTask, std::less<>>* tasks,
                           std::string_view source_name) {
  const auto rows = format == PoolFormat::Jsonl ? read_jsonl(contents, source_name) : read_csv(contents, source_name);
  ResponsePool pool;
  for (const auto& row : rows) {
    if (row.task_id.empty() || row.response_id.empty()) {
      parse_error(source_name, row.line, "task_id and response_id must be non-empty");
    }
    const auto label = parse_label(row.gold_label);
    if (!label) {
      throw Error(ErrorCode::UnknownLabel, std::string(source_name) + ":" + std::to_string(row.line) +
                                               ": unknown gold label '" + row.gold_label + "'");
    }
    if (tasks != nullptr) {
      const auto it = tasks->find(row.task_id);
      if (it != tasks->end() && !it->second.scale.contains(*label)) {
        throw Error(ErrorCode::UnknownLabel, std::string(source_name) + ":" + std::to_string(row.line) +
                                                 ": gold label " + row.gold_label + " is not on the " +
                                                 std::string(it->second.scale.name()) + " scale of task " +
                                                 row.task_id);
      }
    }
    pool.add(row.task_id, GoldLabeledResponse{{row.response_id, row.text}, *label});
  }
  return pool;
}

ResponsePool ingest(const std::filesystem::path& path, PoolFormat format,
                    const std::map<std::string, ScoringTask, std::less<>>* tasks) {
  return ingest_string(read_text_file(path), format, tasks, path.string());
}

namespace {

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t sample_seed(std::string_view task_id, std::uint64_t seed) noexcept {
  return splitmix64(seed ^ fnv1a64(task_id));
}

SampleRng::SampleRng(std::string_view task_id, std::uint64_t seed) : engine_(sample_seed(task_id, seed)) {}

std::uint64_t SampleRng::below(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorCode::InvalidArgument, "empty range");
  // Reject the low (2^64 mod bound) values so every residue is equally likely.
  const std::uint64_t threshold = (0 - bound) % bound;
  while (true) {
    const auto r = engine_();
    if (r >= threshold) return r % bound;
  }
}

std::vector<GoldLabeledResponse> balanced_sample(const ResponsePool& pool, const ScoringTask& task,
                                                 const BalancedSampleSpec& spec) {
  if (spec.cap_per_label < 1) throw Error(ErrorCode::InvalidArgument, "cap_per_label must be >= 1");
  const auto& all = pool.responses(task.id);
  SampleRng rng(task.id, spec.seed);

  std::vector<GoldLabeledResponse> out;
  for (auto label : task.scale.labels()) {
    std::vector<const GoldLabeledResponse*> candidates;
    for (const auto& item : all) {
      if (item.gold == label) candidates.push_back(&item);
    }
    if (candidates.empty()) {
      log_warning("task " + task.id + ": no responses available for label " + std::string(label_name(label)));
      continue;
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const auto* a, const auto* b) { return a->response.id < b->response.id; });
    const auto take = std::min(spec.cap_per_label, candidates.size());
    for (std::size_t i = 0; i < take; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(candidates.size() - i));
      std::swap(candidates[i], candidates[j]);
      out.push_back(*candidates[i]);
    }
  }
  return out;
}

std::string sample_to_jsonl(const std::string& task_id, const std::vector<GoldLabeledResponse>& sample) {
  std::string out;
  for (const auto& item : sample) {
    nlohmann::json line = {{"task_id", task_id},
                           {"response_id", item.response.id},
                           {"text", item.response.text},
                           {"gold_label", std::string(label_name(item.gold))}};
    out += line.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

}  // namespace autoscore
