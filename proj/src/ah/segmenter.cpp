#include "ah/segmenter.hpp"

#include "ah/errors.hpp"

namespace ah {

void SegmentationPolicy::check() const {
  if (clip_len_ms <= 0) {
    throw Error(ErrorCode::domain, "clip length must be positive");
  }
  if (min_tail_ms < 0 || min_tail_ms > clip_len_ms) {
    throw Error(ErrorCode::domain, "min tail must lie in [0, clip length]");
  }
}

std::vector<TimeInterval> partition(const TimeInterval& interval,
                                    const SegmentationPolicy& policy) {
  policy.check();
  const Millis total = interval.duration_ms();
  if (total < policy.clip_len_ms) {
    return {interval};
  }

  std::vector<TimeInterval> windows;
  const Millis full_windows = total / policy.clip_len_ms;
  for (Millis i = 0; i < full_windows; ++i) {
    const Millis start = interval.start_ms + i * policy.clip_len_ms;
    windows.push_back(TimeInterval{start, start + policy.clip_len_ms});
  }
  const Millis tail = total - full_windows * policy.clip_len_ms;
  if (tail > 0 && tail >= policy.min_tail_ms) {
    windows.push_back(TimeInterval{windows.back().end_ms, interval.end_ms});
  }
  return windows;
}

namespace {

void append_clips(std::vector<ClipSpec>& out, const std::string& video_id,
                  const std::vector<TimeInterval>& windows, std::optional<int> label) {
  for (const TimeInterval& window : windows) {
    out.push_back(ClipSpec::make(video_id, window, label));
  }
}

}  // namespace

std::vector<ClipSpec> plan_training_clips(const VideoAnnotation& annotation,
                                          const SegmentationPolicy& policy) {
  policy.check();
  if (!annotation.duration_ms) {
    throw Error(ErrorCode::precondition,
                "annotation for video " + annotation.video_id +
                    " has no duration; run validate() against probed media first");
  }
  const TimeInterval whole{0, *annotation.duration_ms};

  std::vector<ClipSpec> clips;
  if (annotation.global_label == 0) {
    if (policy.negative_single_sample) {
      clips.push_back(ClipSpec::make(annotation.video_id, whole, 0));
    } else {
      append_clips(clips, annotation.video_id, partition(whole, policy), 0);
    }
  } else {
    for (const TimeInterval& segment : annotation.segments) {
      append_clips(clips, annotation.video_id, partition(segment, policy), 1);
    }
  }
  return clips;
}

std::vector<ClipSpec> plan_inference_clips(const std::string& video_id, double duration_s,
                                           const SegmentationPolicy& policy) {
  policy.check();
  const Millis duration = to_millis(duration_s);
  if (duration <= 0) {
    throw Error(ErrorCode::domain,
                "duration must be positive for video " + video_id + ", got " +
                    std::to_string(duration_s) + "s");
  }
  const TimeInterval whole{0, duration};
  std::vector<TimeInterval> windows = partition(whole, policy);
  if (windows.empty() && policy.rescue_empty) {
    windows.push_back(whole);
  }

  std::vector<ClipSpec> clips;
  append_clips(clips, video_id, windows, std::nullopt);
  return clips;
}

}  // namespace ah
