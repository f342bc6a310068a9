#include "ah/mock_server.hpp"

#include <chrono>

#include "httplib.h"

#include "ah/errors.hpp"

namespace ah {

ScenarioEntry ScenarioEntry::from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::parse, "scenario entry is not an object");
  ScenarioEntry entry;
  if (j.contains("response")) entry.response = j["response"].get<std::string>();
  if (j.contains("fail")) entry.fail_first = j["fail"].get<int>();
  if (j.contains("delay_ms")) entry.delay_ms = j["delay_ms"].get<int>();
  if (j.contains("status")) entry.status = j["status"].get<int>();
  if (entry.fail_first < 0) throw Error(ErrorCode::domain, "scenario fail count must be >= 0");
  if (entry.delay_ms < 0) throw Error(ErrorCode::domain, "scenario delay_ms must be >= 0");
  return entry;
}

MockScenario MockScenario::from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::parse, "scenario is not an object");
  MockScenario scenario;
  if (j.contains("default")) scenario.fallback = ScenarioEntry::from_json(j["default"]);
  if (j.contains("clips")) {
    if (!j["clips"].is_object()) throw Error(ErrorCode::parse, "scenario clips is not an object");
    for (const auto& [clip_id, entry] : j["clips"].items()) {
      scenario.clips[clip_id] = ScenarioEntry::from_json(entry);
    }
  }
  return scenario;
}

MockScenario MockScenario::load_file(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::parse, path + ": " + e.what());
  }
  return from_json(j);
}

MockScenario MockScenario::uniform(const std::vector<std::string>& clip_ids,
                                   const std::string& response) {
  MockScenario scenario;
  for (const auto& id : clip_ids) scenario.clips[id] = ScenarioEntry{response};
  return scenario;
}

MockModelServer::MockModelServer(MockScenario scenario)
    : scenario_(std::move(scenario)), server_(std::make_unique<httplib::Server>()) {}

MockModelServer::~MockModelServer() { stop(); }

std::string MockModelServer::base_url() const {
  return "http://127.0.0.1:" + std::to_string(port_);
}

int MockModelServer::attempts_for(const std::string& clip_id) const {
  std::lock_guard<std::mutex> lock(attempts_mutex_);
  auto it = attempts_.find(clip_id);
  return it == attempts_.end() ? 0 : it->second;
}

void MockModelServer::handle_chat(const std::string& body, const std::string& header_clip_id,
                                  int& status_out, std::string& body_out) {
  std::string clip_id = header_clip_id;
  if (clip_id.empty()) {
    try {
      const Json j = Json::parse(body);
      if (j.contains("user") && j["user"].is_string()) clip_id = j["user"].get<std::string>();
    } catch (const Json::parse_error&) {
      // fall through to the no-id path
    }
  }

  const ScenarioEntry* entry = nullptr;
  auto it = scenario_.clips.find(clip_id);
  if (it != scenario_.clips.end()) {
    entry = &it->second;
  } else if (scenario_.fallback) {
    entry = &*scenario_.fallback;
  }
  if (entry == nullptr) {
    status_out = 400;
    body_out = Json{{"error", "no scenario for clip: " + clip_id}}.dump();
    return;
  }

  int attempt = 0;
  {
    std::lock_guard<std::mutex> lock(attempts_mutex_);
    attempt = ++attempts_[clip_id];
  }
  if (entry->delay_ms > 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(entry->delay_ms));
  }
  if (attempt <= entry->fail_first) {
    status_out = 500;
    body_out = Json{{"error", "scripted failure"}}.dump();
    return;
  }
  if (entry->status != 200) {
    status_out = entry->status;
    body_out = Json{{"error", "scripted status"}}.dump();
    return;
  }
  status_out = 200;
  Json response;
  response["choices"] =
      Json::array({Json{{"message", Json{{"role", "assistant"}, {"content", entry->response}}}}});
  body_out = response.dump();
}

void MockModelServer::start(int port) {
  server_->Post("/v1/chat/completions",
                [this](const httplib::Request& req, httplib::Response& res) {
                  const int now = ++in_flight_;
                  int seen = max_concurrent_.load();
                  while (now > seen && !max_concurrent_.compare_exchange_weak(seen, now)) {
                  }
                  ++total_;

                  int status = 500;
                  std::string body;
                  handle_chat(req.body, req.get_header_value("x-clip-id"), status, body);
                  res.status = status;
                  res.set_content(body, "application/json");
                  --in_flight_;
                });
  server_->Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
    Json stats;
    stats["total"] = total_.load();
    stats["max_concurrent"] = max_concurrent_.load();
    Json attempts = Json::object();
    {
      std::lock_guard<std::mutex> lock(attempts_mutex_);
      for (const auto& [clip_id, count] : attempts_) attempts[clip_id] = count;
    }
    stats["attempts"] = attempts;
    res.set_content(stats.dump(), "application/json");
  });

  if (port > 0) {
    if (!server_->bind_to_port("127.0.0.1", port)) {
      throw Error(ErrorCode::io, "mock server failed to bind port " + std::to_string(port));
    }
    port_ = port;
  } else {
    port_ = server_->bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw Error(ErrorCode::io, "mock server failed to bind a port");
  }
  serve_thread_ = std::thread([this]() { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void MockModelServer::stop() {
  if (serve_thread_.joinable()) {
    server_->stop();
    serve_thread_.join();
  }
}

void MockModelServer::wait() {
  if (serve_thread_.joinable()) serve_thread_.join();
}

}  // namespace ah
