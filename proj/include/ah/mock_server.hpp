#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "ah/jsonl.hpp"

namespace httplib {
class Server;
}

namespace ah {

/// One scripted behavior: fail the first `fail_first` attempts with HTTP 500,
/// then (or immediately) serve `response`, unless a non-200 `status` forces a
/// permanent scripted status. `delay_ms` stalls every attempt.
struct ScenarioEntry {
  std::string response;
  int fail_first = 0;
  int delay_ms = 0;
  int status = 200;

  static ScenarioEntry from_json(const Json& j);
};

/// Scenario file: {"default": entry?, "clips": {clip_id: entry, ...}}.
/// A request for a clip with no entry and no default gets HTTP 400.
struct MockScenario {
  std::optional<ScenarioEntry> fallback;
  std::map<std::string, ScenarioEntry> clips;

  static MockScenario from_json(const Json& j);
  static MockScenario load_file(const std::string& path);

  /// Every listed clip answers with the given text.
  static MockScenario uniform(const std::vector<std::string>& clip_ids,
                              const std::string& response);
};

/// Chat-completions mock keyed by clip id (x-clip-id header, falling back to
/// the request's `user` field). GET /stats reports request counters, including
/// the high-water mark of concurrent in-flight requests.
class MockModelServer {
 public:
  explicit MockModelServer(MockScenario scenario);
  ~MockModelServer();

  MockModelServer(const MockModelServer&) = delete;
  MockModelServer& operator=(const MockModelServer&) = delete;

  /// Binds 127.0.0.1 (a free port unless `port` > 0) and serves from a
  /// background thread.
  void start(int port = 0);
  void stop();

  /// Blocks until the server stops.
  void wait();

  int port() const { return port_; }
  std::string base_url() const;

  int total_requests() const { return total_.load(); }
  int max_concurrent() const { return max_concurrent_.load(); }
  int attempts_for(const std::string& clip_id) const;

 private:
  void handle_chat(const std::string& body, const std::string& header_clip_id,
                   int& status_out, std::string& body_out);

  MockScenario scenario_;
  std::unique_ptr<httplib::Server> server_;
  std::thread serve_thread_;
  int port_ = 0;

  std::atomic<int> total_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_concurrent_{0};
  mutable std::mutex attempts_mutex_;
  std::map<std::string, int> attempts_;
};

}  // namespace ah
