#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ah/time_interval.hpp"

namespace ah {

/// Deterministic clip identity: "{video_id}:{start_ms}-{end_ms}".
std::string make_clip_id(const std::string& video_id, const TimeInterval& window);

/// A planned window in a source video; labels are absent on inference plans.
struct ClipSpec {
  std::string clip_id;
  std::string video_id;
  TimeInterval window;
  std::optional<int> label;

  static ClipSpec make(const std::string& video_id, const TimeInterval& window,
                       std::optional<int> label);
};

/// A materialized clip: the spec plus its media files on disk.
struct ClipRecord {
  std::string clip_id;
  std::string video_id;
  TimeInterval window;
  std::optional<int> label;
  std::string video_path;
  std::optional<std::string> audio_path;
  double measured_duration_s = 0.0;
};

// Plan and record files share the JSONL idiom used everywhere else:
// {clip_id, video_id, start_s, end_s, label} plus media fields on records.
std::size_t write_clip_plan(const std::vector<ClipSpec>& plan, const std::string& path);
std::vector<ClipSpec> read_clip_plan(const std::string& path);

std::size_t write_clip_records(const std::vector<ClipRecord>& records, const std::string& path);
std::vector<ClipRecord> read_clip_records(const std::string& path);

}  // namespace ah
