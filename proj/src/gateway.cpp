#include "autoscore/gateway.hpp"

#include <algorithm>
#include <cstdio>
#include <thread>

#include "autoscore/common.hpp"
#include "autoscore/error.hpp"

namespace autoscore {

void SamplingConfig::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw Error(ErrorCode::InvalidArgument, "temperature must lie in [0, 2]");
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "top_p must lie in (0, 1]");
  }
}

SamplingConfig sampling_preset(SamplingPreset preset) noexcept {
  switch (preset) {
    case SamplingPreset::Greedy: return {0.0, 0.01};
    case SamplingPreset::Nucleus: return {0.9, 0.95};
  }
  return {0.0, 0.01};
}

std::optional<SamplingPreset> parse_sampling_preset(std::string_view name) noexcept {
  const auto lowered = to_lower_ascii(name);
  if (lowered == "greedy") return SamplingPreset::Greedy;
  if (lowered == "nucleus") return SamplingPreset::Nucleus;
  return std::nullopt;
}

namespace {

void append_field(std::string& out, std::string_view value) {
  out += std::to_string(value.size());
  out += ':';
  out += value;
  out += '\n';
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string cache_key(const ChatRequest& request) {
  std::string material = "autoscore-transcript-v1\n";
  append_field(material, request.model.model_id);
  append_field(material, format_real(request.sampling.temperature));
  append_field(material, format_real(request.sampling.top_p));
  append_field(material, std::to_string(request.messages.messages.size()));
  for (const auto& m : request.messages.messages) {
    append_field(material, role_name(m.role));
    append_field(material, m.content);
  }
  append_field(material, std::to_string(request.call_index));
  return sha256_hex(material);
}

nlohmann::json request_snapshot(const ChatRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.messages.messages) {
    messages.push_back({{"role", std::string(role_name(m.role))}, {"content", m.content}});
  }
  return {{"model_id", request.model.model_id},
          {"temperature", request.sampling.temperature},
          {"top_p", request.sampling.top_p},
          {"call_index", request.call_index},
          {"messages", messages}};
}

nlohmann::json TranscriptRecord::to_json() const {
  return {{"cache_key", cache_key},
          {"request", request},
          {"reply",
           {{"text", reply.text},
            {"prompt_tokens", reply.usage.prompt_tokens},
            {"completion_tokens", reply.usage.completion_tokens},
            {"latency_ms", reply.latency_ms}}},
          {"timestamp", timestamp}};
}

TranscriptRecord TranscriptRecord::from_json(const nlohmann::json& doc) {
  TranscriptRecord r;
  r.cache_key = doc.at("cache_key").get<std::string>();
  r.request = doc.value("request", nlohmann::json::object());
  const auto& reply = doc.at("reply");
  r.reply.text = reply.at("text").get<std::string>();
  r.reply.usage.prompt_tokens = reply.value("prompt_tokens", std::int64_t{0});
  r.reply.usage.completion_tokens = reply.value("completion_tokens", std::int64_t{0});
  r.reply.latency_ms = reply.value("latency_ms", std::int64_t{0});
  r.timestamp = doc.value("timestamp", std::string{});
  return r;
}

nlohmann::json wire_body(const ChatRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.messages.messages) {
    messages.push_back({{"role", std::string(role_name(m.role))}, {"content", m.content}});
  }
  return {{"model", request.model.model_id},
          {"temperature", request.sampling.temperature},
          {"top_p", request.sampling.top_p},
          {"max_tokens", request.model.max_tokens},
          {"messages", messages}};
}

ChatReply parse_wire_reply(std::string_view body) {
  try {
    const auto doc = nlohmann::json::parse(body);
    ChatReply reply;
    const auto& message = doc.at("choices").at(0).at("message");
    if (!message.contains("content") || !message.at("content").is_string()) {
      throw Error(ErrorCode::TransportError, "chat completion reply carries no text content");
    }
    reply.text = message.at("content").get<std::string>();
    if (doc.contains("usage") && doc.at("usage").is_object()) {
      reply.usage.prompt_tokens = doc.at("usage").value("prompt_tokens", std::int64_t{0});
      reply.usage.completion_tokens = doc.at("usage").value("completion_tokens", std::int64_t{0});
    }
    return reply;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::TransportError, std::string("malformed chat completion reply: ") + e.what());
  }
}

TranscriptStore::TranscriptStore(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(path_)) {
    const auto contents = read_text_file(path_);
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < contents.size()) {
      auto end = contents.find('\n', pos);
      const bool terminated = end != std::string::npos;
      if (!terminated) end = contents.size();
      const auto line = trim(std::string_view(contents).substr(pos, end - pos));
      ++line_no;
      pos = end + 1;
      if (line.empty()) continue;
      try {
        auto record = TranscriptRecord::from_json(nlohmann::json::parse(line));
        index_.insert_or_assign(record.cache_key, std::move(record));
      } catch (const std::exception& e) {
        if (!terminated) {
          // Interrupted append; the next run re-issues that call.
          log_warning(path_.string() + ": ignoring truncated final line " + std::to_string(line_no));
          continue;
        }
        throw Error(ErrorCode::ParseError,
                    path_.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
  } else if (path_.has_parent_path()) {
    std::filesystem::create_directories(path_.parent_path());
  }
}

std::optional<TranscriptRecord> TranscriptStore::find(const std::string& key) const {
  std::shared_lock lock(mutex_);
  const auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void TranscriptStore::append(const TranscriptRecord& record) {
  const auto line = record.to_json().dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
  std::unique_lock lock(mutex_);
  if (!out_.is_open()) {
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw Error(ErrorCode::IoError, "cannot append to " + path_.string());
  }
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  out_.flush();
  if (!out_) throw Error(ErrorCode::IoError, "write failed on " + path_.string());
  index_.insert_or_assign(record.cache_key, record);
}

std::size_t TranscriptStore::size() const {
  std::shared_lock lock(mutex_);
  return index_.size();
}

RateLimiter::RateLimiter(double tokens_per_second, double burst)
    : rate_(tokens_per_second), burst_(std::max(1.0, burst)), tokens_(std::max(1.0, burst)),
      last_(std::chrono::steady_clock::now()) {
  if (!(tokens_per_second > 0.0)) throw Error(ErrorCode::InvalidArgument, "rate limit must be positive");
}

void RateLimiter::acquire() {
  while (true) {
    std::chrono::duration<double> wait{};
    {
      std::lock_guard lock(mutex_);
      const auto now = std::chrono::steady_clock::now();
      const std::chrono::duration<double> elapsed = now - last_;
      last_ = now;
      tokens_ = std::min(burst_, tokens_ + elapsed.count() * rate_);
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    }
    std::this_thread::sleep_for(wait);
  }
}

std::optional<GatewayMode> parse_gateway_mode(std::string_view name) noexcept {
  const auto lowered = to_lower_ascii(name);
  if (lowered == "live") return GatewayMode::Live;
  if (lowered == "record") return GatewayMode::Record;
  if (lowered == "replay") return GatewayMode::Replay;
  if (lowered == "replay-strict" || lowered == "replay_strict") return GatewayMode::ReplayStrict;
  return std::nullopt;
}

std::string_view gateway_mode_name(GatewayMode mode) noexcept {
  switch (mode) {
    case GatewayMode::Live: return "live";
    case GatewayMode::Record: return "record";
    case GatewayMode::Replay: return "replay";
    case GatewayMode::ReplayStrict: return "replay-strict";
  }
  return "live";
}

Gateway::Gateway(std::shared_ptr<Transport> transport, std::shared_ptr<TranscriptStore> store,
                 RetryPolicy retry, std::shared_ptr<RateLimiter> limiter)
    : transport_(std::move(transport)), store_(std::move(store)), retry_(retry),
      limiter_(std::move(limiter)) {
  if (retry_.max_attempts < 1) throw Error(ErrorCode::InvalidArgument, "retry budget must be >= 1");
}

Completion Gateway::complete(const ChatRequest& request, GatewayMode mode) {
  if (request.call_index < 1) throw Error(ErrorCode::InvalidArgument, "call_index must be >= 1");
  request.sampling.validate();
  if (request.model.model_id.empty()) throw Error(ErrorCode::InvalidArgument, "model_id is empty");

  Completion out{cache_key(request), {}};
  if (mode != GatewayMode::Live && !store_) {
    throw Error(ErrorCode::ConfigError,
                std::string(gateway_mode_name(mode)) + " mode needs a transcript store");
  }

  if (mode == GatewayMode::Replay || mode == GatewayMode::ReplayStrict) {
    if (auto hit = store_->find(out.cache_key)) {
      out.reply = std::move(hit->reply);
      out.reply.retrieved_from_cache = true;
      return out;
    }
    if (mode == GatewayMode::ReplayStrict) {
      throw Error(ErrorCode::CacheMiss, "no recorded transcript for key " + out.cache_key);
    }
  }

  out.reply = send_with_retry(request);
  out.reply.retrieved_from_cache = false;
  if (mode != GatewayMode::Live) {
    store_->append(TranscriptRecord{out.cache_key, request_snapshot(request), out.reply, utc_timestamp()});
  }
  return out;
}

ChatReply Gateway::send_with_retry(const ChatRequest& request) {
  if (!transport_) throw Error(ErrorCode::ConfigError, "no transport configured for a live call");
  auto backoff = retry_.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    if (limiter_) limiter_->acquire();
    try {
      ++transport_calls_;
      const auto started = std::chrono::steady_clock::now();
      auto reply = transport_->send(request);
      if (reply.latency_ms == 0) {
        reply.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - started)
                               .count();
      }
      return reply;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TransportError || !e.retryable() || attempt >= retry_.max_attempts) {
        if (e.code() == ErrorCode::TransportError) {
          throw Error(ErrorCode::TransportError,
                      std::string(e.what()) + " (after " + std::to_string(attempt) + " attempt(s))");
        }
        throw;
      }
      log_warning(std::string("transport error, retrying: ") + e.what());
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<std::int64_t>(static_cast<double>(backoff.count()) * retry_.multiplier));
    }
  }
}

}  // namespace autoscore
