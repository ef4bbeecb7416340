#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include <json.hpp>

#include "autoscore/prompt.hpp"

namespace autoscore {

struct SamplingConfig {
  double temperature = 0.0;  // [0, 2]
  double top_p = 0.01;       // (0, 1]

  void validate() const;
  friend bool operator==(const SamplingConfig&, const SamplingConfig&) = default;
};

enum class SamplingPreset { Greedy, Nucleus };

SamplingConfig sampling_preset(SamplingPreset preset) noexcept;
std::optional<SamplingPreset> parse_sampling_preset(std::string_view name) noexcept;

struct ModelConfig {
  std::string model_id;
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  // Name of the environment variable holding the bearer token.
  std::string api_key_env = "OPENAI_API_KEY";
  int max_tokens = 4096;
  std::chrono::milliseconds timeout{60'000};
};

struct ChatRequest {
  ModelConfig model;
  SamplingConfig sampling;
  MessageSequence messages;
  int call_index = 1;  // >= 1; separates repeated ensemble calls
};

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct ChatReply {
  std::string text;
  TokenUsage usage;
  std::int64_t latency_ms = 0;
  bool retrieved_from_cache = false;
};

// SHA-256 over model id, temperature, top_p, every message (role and
// content, byte-exact) and the call index.
std::string cache_key(const ChatRequest& request);

struct TranscriptRecord {
  std::string cache_key;
  nlohmann::json request;  // model_id, temperature, top_p, call_index, messages
  ChatReply reply;
  std::string timestamp;

  nlohmann::json to_json() const;
  static TranscriptRecord from_json(const nlohmann::json& doc);
};

nlohmann::json request_snapshot(const ChatRequest& request);

// OpenAI-compatible chat-completion body and reply parsing.
nlohmann::json wire_body(const ChatRequest& request);
ChatReply parse_wire_reply(std::string_view body);

class Transport {
 public:
  virtual ~Transport() = default;
  // Throws TransportError (retryable when transient) or AuthError.
  virtual ChatReply send(const ChatRequest& request) = 0;
};

// POSTs wire_body() to the model endpoint; credentials come from the
// environment variable named in the model config.
class HttpTransport final : public Transport {
 public:
  ChatReply send(const ChatRequest& request) override;
};

// Append-only JSON Lines file of TranscriptRecord. Reads are concurrent;
// appends are serialized and each record is written as one line. The most
// recent record for a key wins.
class TranscriptStore {
 public:
  explicit TranscriptStore(std::filesystem::path path);

  std::optional<TranscriptRecord> find(const std::string& key) const;
  void append(const TranscriptRecord& record);
  std::size_t size() const;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, TranscriptRecord> index_;
  std::ofstream out_;
};

// Token bucket; acquire() blocks until a token is available.
class RateLimiter {
 public:
  RateLimiter(double tokens_per_second, double burst);
  void acquire();

 private:
  std::mutex mutex_;
  double rate_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
};

// Live: always call, never persist. Record: always call, persist.
// Replay: serve from the store, call and persist on a miss.
// ReplayStrict: serve from the store, CacheMiss otherwise.
enum class GatewayMode { Live, Record, Replay, ReplayStrict };

std::optional<GatewayMode> parse_gateway_mode(std::string_view name) noexcept;
std::string_view gateway_mode_name(GatewayMode mode) noexcept;
inline bool is_network_mode(GatewayMode mode) noexcept {
  return mode == GatewayMode::Live || mode == GatewayMode::Record;
}

struct Completion {
  std::string cache_key;
  ChatReply reply;
};

class Gateway {
 public:
  Gateway(std::shared_ptr<Transport> transport, std::shared_ptr<TranscriptStore> store,
          RetryPolicy retry = {}, std::shared_ptr<RateLimiter> limiter = nullptr);

  Completion complete(const ChatRequest& request, GatewayMode mode);

  std::size_t transport_calls() const noexcept { return transport_calls_.load(); }

 private:
  ChatReply send_with_retry(const ChatRequest& request);

  std::shared_ptr<Transport> transport_;
  std::shared_ptr<TranscriptStore> store_;
  RetryPolicy retry_;
  std::shared_ptr<RateLimiter> limiter_;
  std::atomic<std::size_t> transport_calls_{0};
};

}  // namespace autoscore
