#pragma once

#include <chrono>
#include <string>

#include "ah/jsonl.hpp"

namespace ah {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

void set_log_level(LogLevel level);
LogLevel log_level();

// One JSONL event per line on stderr: {"ts_ms":..., "level":..., "event":..., ...fields}.
void log_error(const std::string& event, const Json& fields = Json::object());
void log_info(const std::string& event, const Json& fields = Json::object());
void log_debug(const std::string& event, const Json& fields = Json::object());

/// Logs "<stage>.done" with elapsed_ms on destruction.
class StageTimer {
 public:
  explicit StageTimer(std::string stage);
  ~StageTimer();

  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

  /// Extra fields to attach to the completion event.
  void annotate(const std::string& key, const Json& value);

 private:
  std::string stage_;
  Json fields_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace ah
