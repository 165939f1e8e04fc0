#pragma once

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "postreason/jsonl.hpp"

namespace mock {

/// One scripted reply.
struct Reply {
  Reply() = default;
  Reply(int status, std::string text = {}, std::chrono::milliseconds delay = {},
        std::string raw_body = {})
      : status(status), text(std::move(text)), delay(delay), raw_body(std::move(raw_body)) {}

  int status = 200;
  std::string text;
  std::chrono::milliseconds delay{0};
  /// Sent verbatim instead of a chat-completion body when non-empty.
  std::string raw_body;
};

/// OpenAI-compatible chat server for tests. Replies come from a script queue
/// first, then from `responder`. Honors "stop" like vLLM, reporting the hit in
/// `stop_reason`, and counts tokens with postreason::mock_token_count.
class ChatServer {
 public:
  using Responder = std::function<Reply(const postreason::json& request)>;

  ChatServer();
  ~ChatServer();

  ChatServer(const ChatServer&) = delete;
  ChatServer& operator=(const ChatServer&) = delete;

  std::string endpoint() const;
  int port() const { return port_; }

  void script(std::vector<Reply> replies);
  void set_responder(Responder r);
  /// When false, stop hits are reported only through finish_reason.
  void set_report_stop_reason(bool on) { report_stop_reason_ = on; }

  std::size_t requests() const { return requests_.load(); }
  int high_water() const { return high_water_.load(); }
  std::vector<postreason::json> bodies() const;
  std::vector<std::string> authorizations() const;
  void reset_counters();

 private:
  void handle(const httplib::Request& req, httplib::Response& res);

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;

  mutable std::mutex mu_;
  std::deque<Reply> script_;
  Responder responder_;
  std::vector<postreason::json> bodies_;
  std::vector<std::string> auth_;
  std::atomic<bool> report_stop_reason_{true};

  std::atomic<std::size_t> requests_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> high_water_{0};
};

}  // namespace mock
