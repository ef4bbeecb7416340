#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <regex>

#include "autoscore/error.hpp"
#include "autoscore/gateway.hpp"

namespace autoscore {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, kUrl)) {
    throw Error(ErrorCode::ConfigError, "malformed endpoint URL '" + url + "'");
  }
  return {m[1].str(), m[2].matched ? m[2].str() : std::string("/")};
}

bool transient_status(int status) {
  return status == 408 || status == 409 || status == 429 || status >= 500;
}

}  // namespace

ChatReply HttpTransport::send(const ChatRequest& request) {
  const auto endpoint = split_endpoint(request.model.endpoint);
  const char* key = request.model.api_key_env.empty() ? nullptr : std::getenv(request.model.api_key_env.c_str());

  httplib::Client client(endpoint.origin);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(request.model.timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(request.model.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());

  httplib::Headers headers;
  if (key != nullptr && *key != '\0') headers.emplace("Authorization", std::string("Bearer ") + key);

  const auto started = std::chrono::steady_clock::now();
  const auto result = client.Post(endpoint.path, headers, wire_body(request).dump(), "application/json");
  if (!result) {
    throw Error(ErrorCode::TransportError,
                "request to " + request.model.endpoint + " failed: " + httplib::to_string(result.error()), true);
  }
  const int status = result->status;
  if (status == 401 || status == 403) {
    throw Error(ErrorCode::AuthError, "endpoint rejected credentials (HTTP " + std::to_string(status) + ")");
  }
  if (status != 200) {
    throw Error(ErrorCode::TransportError, "HTTP " + std::to_string(status) + " from " + request.model.endpoint,
                transient_status(status));
  }
  auto reply = parse_wire_reply(result->body);
  reply.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - started)
                         .count();
  return reply;
}

}  // namespace autoscore
