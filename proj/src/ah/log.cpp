#include "ah/log.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>

namespace ah {

namespace {

std::atomic<LogLevel> g_level{LogLevel::info};
std::mutex g_write_mutex;

const char* level_name(LogLevel level) {
  switch (level) {
    case LogLevel::quiet: return "error";
    case LogLevel::info: return "info";
    case LogLevel::debug: return "debug";
  }
  return "?";
}

void emit(LogLevel level, const std::string& event, const Json& fields) {
  Json line;
  line["ts_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::system_clock::now().time_since_epoch())
                      .count();
  line["level"] = level_name(level);
  line["event"] = event;
  for (const auto& [key, value] : fields.items()) line[key] = value;
  const std::string out = line.dump();
  std::lock_guard<std::mutex> lock(g_write_mutex);
  std::fprintf(stderr, "%s\n", out.c_str());
}

}  // namespace

void set_log_level(LogLevel level) { g_level.store(level); }

LogLevel log_level() { return g_level.load(); }

void log_error(const std::string& event, const Json& fields) {
  emit(LogLevel::quiet, event, fields);
}

void log_info(const std::string& event, const Json& fields) {
  if (log_level() >= LogLevel::info) emit(LogLevel::info, event, fields);
}

void log_debug(const std::string& event, const Json& fields) {
  if (log_level() >= LogLevel::debug) emit(LogLevel::debug, event, fields);
}

StageTimer::StageTimer(std::string stage)
    : stage_(std::move(stage)),
      fields_(Json::object()),
      start_(std::chrono::steady_clock::now()) {}

void StageTimer::annotate(const std::string& key, const Json& value) { fields_[key] = value; }

StageTimer::~StageTimer() {
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start_);
  Json fields = fields_;
  fields["elapsed_ms"] = elapsed.count();
  log_info(stage_ + ".done", fields);
}

}  // namespace ah
