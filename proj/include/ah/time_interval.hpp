#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ah {

/// All timestamps are kept as integer milliseconds so interval arithmetic is
/// exact; seconds only appear at IO boundaries.
using Millis = std::int64_t;

/// Rounds seconds to millisecond resolution, half away from zero.
Millis to_millis(double seconds);

double to_seconds(Millis ms);

/// Half-open time window [start_ms, end_ms) inside a source video.
struct TimeInterval {
  Millis start_ms = 0;
  Millis end_ms = 0;

  /// Validating constructor from second-resolution input. Rejects negative
  /// start, non-positive length (after rounding) and non-finite values.
  static TimeInterval from_seconds(double start_s, double end_s);
  static TimeInterval from_millis(Millis start_ms, Millis end_ms);

  double start_s() const { return to_seconds(start_ms); }
  double end_s() const { return to_seconds(end_ms); }
  Millis duration_ms() const { return end_ms - start_ms; }
  double duration_s() const { return to_seconds(duration_ms()); }

  bool contains(Millis t) const { return t >= start_ms && t < end_ms; }

  bool operator==(const TimeInterval&) const = default;
  auto operator<=>(const TimeInterval&) const = default;
};

/// Sorted, pairwise-disjoint union of the inputs; intervals that touch
/// (gap = 0) are merged into one.
std::vector<TimeInterval> merge_intervals(std::vector<TimeInterval> segments);

}  // namespace ah
