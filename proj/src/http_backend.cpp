#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <thread>

#include "postreason/client.hpp"
#include "postreason/error.hpp"

namespace postreason {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("malformed endpoint '" + url + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.origin = url.substr(0, path_start);
  std::string base = path_start == std::string::npos ? std::string{} : url.substr(path_start);
  while (!base.empty() && base.back() == '/') base.pop_back();
  constexpr std::string_view kRoute = "/chat/completions";
  if (base.size() >= kRoute.size() && base.compare(base.size() - kRoute.size(), kRoute.size(), kRoute) == 0) {
    ep.path = base;
  } else {
    ep.path = base + std::string(kRoute);
  }
  return ep;
}

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpChatBackend::HttpChatBackend(HttpOptions options) : options_(options) {
  if (options_.retry.max_attempts < 1) throw ConfigError("retry max_attempts must be >= 1");
}

RawCompletion HttpChatBackend::complete(const PromptBundle& bundle,
                                        const GenerationProfile& profile,
                                        const ModelRegistryEntry& entry) {
  const auto ep = split_endpoint(entry.endpoint);
  const std::string body = build_chat_request(bundle, profile, entry).dump();

  httplib::Headers headers;
  if (!entry.api_key_env.empty()) {
    const char* key = std::getenv(entry.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw ConfigError(entry.model_id + ": environment variable " + entry.api_key_env +
                        " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  httplib::Client cli(ep.origin);
  cli.set_connection_timeout(options_.connect_timeout);
  cli.set_read_timeout(options_.read_timeout);
  cli.set_write_timeout(options_.read_timeout);

  const auto started = std::chrono::steady_clock::now();
  int last_status = 0;
  std::string last_error;
  for (int attempt = 1; attempt <= options_.retry.max_attempts; ++attempt) {
    if (attempt > 1) std::this_thread::sleep_for(options_.retry.delay_for(attempt - 1));
    ++requests_sent_;
    auto res = cli.Post(ep.path, headers, body, "application/json");
    if (!res) {
      last_status = 0;
      last_error = httplib::to_string(res.error());
      continue;
    }
    last_status = res->status;
    if (res->status >= 200 && res->status < 300) {
      RawCompletion rc = parse_chat_response(res->body, profile);
      rc.attempts = attempt;
      rc.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - started)
                          .count();
      return rc;
    }
    if (!retryable(res->status)) {
      throw ProtocolError(entry.model_id + ": upstream rejected request with HTTP " +
                              std::to_string(res->status) + ": " + res->body.substr(0, 200),
                          res->status);
    }
    last_error = "HTTP " + std::to_string(res->status);
  }
  throw TransportError(entry.model_id + ": gave up after " +
                           std::to_string(options_.retry.max_attempts) + " attempts (" +
                           last_error + ")",
                       last_status);
}

}  // namespace postreason
