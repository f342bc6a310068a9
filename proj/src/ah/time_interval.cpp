#include "ah/time_interval.hpp"

#include <algorithm>
#include <cmath>

#include "ah/errors.hpp"

namespace ah {

Millis to_millis(double seconds) {
  if (!std::isfinite(seconds)) {
    throw Error(ErrorCode::domain, "timestamp is not finite");
  }
  return std::llround(seconds * 1000.0);
}

double to_seconds(Millis ms) {
  return static_cast<double>(ms) / 1000.0;
}

TimeInterval TimeInterval::from_seconds(double start_s, double end_s) {
  return from_millis(to_millis(start_s), to_millis(end_s));
}

TimeInterval TimeInterval::from_millis(Millis start_ms, Millis end_ms) {
  if (start_ms < 0) {
    throw Error(ErrorCode::domain,
                "interval start must be >= 0, got " + std::to_string(start_ms) + "ms");
  }
  if (end_ms <= start_ms) {
    throw Error(ErrorCode::domain, "interval end must be after start, got [" +
                                       std::to_string(start_ms) + "ms, " +
                                       std::to_string(end_ms) + "ms)");
  }
  return TimeInterval{start_ms, end_ms};
}

std::vector<TimeInterval> merge_intervals(std::vector<TimeInterval> segments) {
  if (segments.empty()) {
    return segments;
  }
  std::sort(segments.begin(), segments.end());
  std::vector<TimeInterval> merged;
  merged.push_back(segments.front());
  for (std::size_t i = 1; i < segments.size(); ++i) {
    const TimeInterval& next = segments[i];
    if (next.start_ms <= merged.back().end_ms) {
      merged.back().end_ms = std::max(merged.back().end_ms, next.end_ms);
    } else {
      merged.push_back(next);
    }
  }
  return merged;
}

}  // namespace ah
