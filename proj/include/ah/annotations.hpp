#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ah/time_interval.hpp"

namespace ah {

/// One source video's global A/H label plus its annotated time segments.
/// Freshly parsed annotations carry segments exactly as written in the
/// manifest; `validate` produces the normalized form bound to the real media
/// duration.
struct VideoAnnotation {
  std::string video_id;
  std::string media_path;
  int global_label = 0;  // 0 = no A/H anywhere, 1 = A/H present in `segments`
  std::vector<TimeInterval> segments;
  std::optional<Millis> duration_ms;

  std::optional<double> duration_s() const {
    return duration_ms ? std::optional<double>(to_seconds(*duration_ms)) : std::nullopt;
  }
};

struct Warning {
  std::string video_id;
  std::string code;
  std::string detail;
};

/// Collects structured warnings for the diagnostics stream.
struct Diagnostics {
  std::vector<Warning> warnings;

  void add(std::string video_id, std::string code, std::string detail) {
    warnings.push_back({std::move(video_id), std::move(code), std::move(detail)});
  }
};

/// Parses a JSONL manifest (one object per line: video_id, path, label,
/// segments as [[start,end],...] in seconds). Records come back in file order
/// with segments unnormalized. Duplicate video ids are a conflict error;
/// labels outside {0,1} are a domain error; anything structurally wrong is a
/// parse error naming the line.
std::vector<VideoAnnotation> parse_manifest(std::string_view manifest_text);

/// Binds an annotation to the probed media duration: merges segments, clamps
/// them to [0, duration], drops the ones that fall entirely outside (with a
/// warning), and stamps duration_ms. A positive annotation whose segments all
/// vanish is an inconsistent-annotation error.
VideoAnnotation validate(const VideoAnnotation& annotation, double probed_duration_s,
                         Diagnostics& diagnostics);

}  // namespace ah
