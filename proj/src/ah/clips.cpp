#include "ah/clips.hpp"

#include "ah/errors.hpp"
#include "ah/jsonl.hpp"

namespace ah {

std::string make_clip_id(const std::string& video_id, const TimeInterval& window) {
  return video_id + ":" + std::to_string(window.start_ms) + "-" + std::to_string(window.end_ms);
}

ClipSpec ClipSpec::make(const std::string& video_id, const TimeInterval& window,
                        std::optional<int> label) {
  return ClipSpec{make_clip_id(video_id, window), video_id, window, label};
}

namespace {

Json spec_to_json(const ClipSpec& spec) {
  Json row;
  row["clip_id"] = spec.clip_id;
  row["video_id"] = spec.video_id;
  row["start_s"] = spec.window.start_s();
  row["end_s"] = spec.window.end_s();
  if (spec.label) {
    row["label"] = *spec.label;
  } else {
    row["label"] = nullptr;
  }
  return row;
}

std::optional<int> label_from(const Json& row, std::size_t line_no) {
  const Json& label = row.at("label");
  if (label.is_null()) {
    return std::nullopt;
  }
  if (!label.is_number_integer()) {
    throw Error(ErrorCode::parse,
                "clip file line " + std::to_string(line_no) + ": label must be 0, 1 or null");
  }
  const int value = label.get<int>();
  if (value != 0 && value != 1) {
    throw Error(ErrorCode::domain,
                "clip file line " + std::to_string(line_no) + ": label outside {0,1}");
  }
  return value;
}

ClipSpec spec_from_json(const Json& row, std::size_t line_no) {
  try {
    ClipSpec spec;
    spec.clip_id = row.at("clip_id").get<std::string>();
    spec.video_id = row.at("video_id").get<std::string>();
    spec.window =
        TimeInterval::from_seconds(row.at("start_s").get<double>(), row.at("end_s").get<double>());
    spec.label = label_from(row, line_no);
    return spec;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse,
                "clip file line " + std::to_string(line_no) + ": " + e.what());
  }
}

}  // namespace

std::size_t write_clip_plan(const std::vector<ClipSpec>& plan, const std::string& path) {
  std::vector<Json> rows;
  rows.reserve(plan.size());
  for (const ClipSpec& spec : plan) {
    rows.push_back(spec_to_json(spec));
  }
  return write_jsonl_file(path, rows);
}

std::vector<ClipSpec> read_clip_plan(const std::string& path) {
  std::vector<ClipSpec> plan;
  for_each_jsonl(read_file(path), [&](std::size_t line_no, const Json& row) {
    plan.push_back(spec_from_json(row, line_no));
  });
  return plan;
}

std::size_t write_clip_records(const std::vector<ClipRecord>& records, const std::string& path) {
  std::vector<Json> rows;
  rows.reserve(records.size());
  for (const ClipRecord& rec : records) {
    Json row = spec_to_json(ClipSpec{rec.clip_id, rec.video_id, rec.window, rec.label});
    row["video_path"] = rec.video_path;
    if (rec.audio_path) {
      row["audio_path"] = *rec.audio_path;
    } else {
      row["audio_path"] = nullptr;
    }
    row["measured_duration_s"] = rec.measured_duration_s;
    rows.push_back(std::move(row));
  }
  return write_jsonl_file(path, rows);
}

std::vector<ClipRecord> read_clip_records(const std::string& path) {
  std::vector<ClipRecord> records;
  for_each_jsonl(read_file(path), [&](std::size_t line_no, const Json& row) {
    ClipSpec spec = spec_from_json(row, line_no);
    ClipRecord rec;
    rec.clip_id = std::move(spec.clip_id);
    rec.video_id = std::move(spec.video_id);
    rec.window = spec.window;
    rec.label = spec.label;
    try {
      rec.video_path = row.at("video_path").get<std::string>();
      if (row.contains("audio_path") && !row["audio_path"].is_null()) {
        rec.audio_path = row["audio_path"].get<std::string>();
      }
      if (row.contains("measured_duration_s")) {
        rec.measured_duration_s = row["measured_duration_s"].get<double>();
      }
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::parse,
                  "clip file line " + std::to_string(line_no) + ": " + e.what());
    }
    records.push_back(std::move(rec));
  });
  return records;
}

}  // namespace ah
