#pragma once

#include <string>
#include <vector>

#include "ah/annotations.hpp"
#include "ah/clips.hpp"
#include "ah/time_interval.hpp"

namespace ah {

/// Controls the clip partitioning rules. Clip length caps every window;
/// a trailing remainder shorter than `min_tail_ms` is discarded.
struct SegmentationPolicy {
  Millis clip_len_ms = 5000;
  Millis min_tail_ms = 1000;
  bool rescue_empty = false;
  /// Treat a negative video as one whole training sample instead of
  /// splitting it into clips.
  bool negative_single_sample = false;

  static SegmentationPolicy training_defaults() { return SegmentationPolicy{}; }
  static SegmentationPolicy inference_defaults() {
    SegmentationPolicy p;
    p.rescue_empty = true;
    return p;
  }

  double clip_len_s() const { return to_seconds(clip_len_ms); }
  double min_tail_s() const { return to_seconds(min_tail_ms); }

  /// Throws a domain error unless clip_len > 0 and 0 <= min_tail <= clip_len.
  void check() const;
};

/// Splits an interval into consecutive windows of at most clip_len. An
/// interval shorter than clip_len is returned whole; a trailing remainder is
/// kept only when it is at least min_tail long.
std::vector<TimeInterval> partition(const TimeInterval& interval,
                                    const SegmentationPolicy& policy);

/// Plans labeled training clips for a validated annotation: negative videos
/// are partitioned whole with label 0, positive videos are partitioned per
/// annotated segment with label 1. Windows stay in source-video coordinates.
std::vector<ClipSpec> plan_training_clips(const VideoAnnotation& annotation,
                                          const SegmentationPolicy& policy);

/// Plans unlabeled clips covering [0, duration) for a test video. When the
/// partition comes back empty and rescue_empty is set, the whole video
/// becomes one clip so no test video disappears.
std::vector<ClipSpec> plan_inference_clips(const std::string& video_id, double duration_s,
                                           const SegmentationPolicy& policy);

}  // namespace ah
