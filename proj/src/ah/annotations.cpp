#include "ah/annotations.hpp"

#include <algorithm>
#include <unordered_set>

#include "ah/errors.hpp"
#include "ah/jsonl.hpp"

namespace ah {

namespace {

std::string at_line(std::size_t line_no) {
  return "manifest line " + std::to_string(line_no) + ": ";
}

VideoAnnotation parse_record(std::size_t line_no, const Json& record) {
  if (!record.is_object()) {
    throw Error(ErrorCode::parse, at_line(line_no) + "record is not an object");
  }
  for (const char* key : {"video_id", "path", "label", "segments"}) {
    if (!record.contains(key)) {
      throw Error(ErrorCode::parse, at_line(line_no) + "missing field '" + key + "'");
    }
  }

  VideoAnnotation ann;
  if (!record["video_id"].is_string() || record["video_id"].get<std::string>().empty()) {
    throw Error(ErrorCode::parse, at_line(line_no) + "'video_id' must be a nonempty string");
  }
  ann.video_id = record["video_id"].get<std::string>();
  if (!record["path"].is_string()) {
    throw Error(ErrorCode::parse, at_line(line_no) + "'path' must be a string");
  }
  ann.media_path = record["path"].get<std::string>();

  if (!record["label"].is_number_integer()) {
    throw Error(ErrorCode::parse, at_line(line_no) + "'label' must be an integer");
  }
  const auto label = record["label"].get<int>();
  if (label != 0 && label != 1) {
    throw Error(ErrorCode::domain, at_line(line_no) + "label must be 0 or 1, got " +
                                       std::to_string(label) + " (video " + ann.video_id + ")");
  }
  ann.global_label = label;

  const Json& segments = record["segments"];
  if (!segments.is_array()) {
    throw Error(ErrorCode::parse, at_line(line_no) + "'segments' must be an array");
  }
  for (const Json& seg : segments) {
    if (!seg.is_array() || seg.size() != 2 || !seg[0].is_number() || !seg[1].is_number()) {
      throw Error(ErrorCode::parse,
                  at_line(line_no) + "segment entries must be [start,end] number pairs");
    }
    try {
      ann.segments.push_back(
          TimeInterval::from_seconds(seg[0].get<double>(), seg[1].get<double>()));
    } catch (const Error& e) {
      throw Error(ErrorCode::parse,
                  at_line(line_no) + "bad segment for video " + ann.video_id + ": " + e.what());
    }
  }

  if (ann.global_label == 0 && !ann.segments.empty()) {
    throw Error(ErrorCode::domain, at_line(line_no) + "video " + ann.video_id +
                                       " has label 0 but lists annotated segments");
  }
  return ann;
}

}  // namespace

std::vector<VideoAnnotation> parse_manifest(std::string_view manifest_text) {
  std::vector<VideoAnnotation> annotations;
  std::unordered_set<std::string> seen_ids;
  for_each_jsonl(manifest_text, [&](std::size_t line_no, const Json& record) {
    VideoAnnotation ann = parse_record(line_no, record);
    if (!seen_ids.insert(ann.video_id).second) {
      throw Error(ErrorCode::conflict,
                  at_line(line_no) + "duplicate video_id '" + ann.video_id + "'");
    }
    annotations.push_back(std::move(ann));
  });
  return annotations;
}

VideoAnnotation validate(const VideoAnnotation& annotation, double probed_duration_s,
                         Diagnostics& diagnostics) {
  const Millis duration = to_millis(probed_duration_s);
  if (duration <= 0) {
    throw Error(ErrorCode::precondition, "probed duration must be positive for video " +
                                             annotation.video_id);
  }

  VideoAnnotation out = annotation;
  out.duration_ms = duration;
  out.segments.clear();

  for (const TimeInterval& seg : merge_intervals(annotation.segments)) {
    if (seg.start_ms >= duration) {
      diagnostics.add(annotation.video_id, "segment_out_of_range",
                      "segment [" + std::to_string(seg.start_s()) + ", " +
                          std::to_string(seg.end_s()) + ") lies beyond media duration " +
                          std::to_string(to_seconds(duration)) + "s; dropped");
      continue;
    }
    TimeInterval clamped = seg;
    clamped.end_ms = std::min(clamped.end_ms, duration);
    out.segments.push_back(clamped);
  }

  if (out.global_label == 1 && out.segments.empty()) {
    throw Error(ErrorCode::inconsistent_annotation,
                "video " + annotation.video_id +
                    " is labeled positive but no annotated segment survives validation");
  }
  return out;
}

}  // namespace ah
