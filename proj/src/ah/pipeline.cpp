#include "ah/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "ah/annotations.hpp"
#include "ah/dataset.hpp"
#include "ah/errors.hpp"
#include "ah/log.hpp"

namespace fs = std::filesystem;

namespace ah {

namespace {

// Message without the "code: " prefix, for rewrapping with extra context.
std::string error_message(const Error& e) {
  const std::string prefix = std::string(to_string(e.code())) + ": ";
  const std::string what = e.what();
  return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

}  // namespace

AbstainPolicy parse_abstain_policy(const std::string& name) {
  if (name == "negative") return AbstainPolicy::negative;
  if (name == "strict") return AbstainPolicy::strict;
  throw Error(ErrorCode::domain, "unknown abstain policy: " + name);
}

const char* to_string(AbstainPolicy policy) {
  switch (policy) {
    case AbstainPolicy::negative: return "negative";
    case AbstainPolicy::strict: return "strict";
  }
  return "?";
}

PipelineMode parse_pipeline_mode(const std::string& name) {
  if (name == "training") return PipelineMode::training;
  if (name == "inference") return PipelineMode::inference;
  throw Error(ErrorCode::domain, "unknown mode: " + name + " (expected training or inference)");
}

namespace {

ToolFlavor parse_flavor(const std::string& name) {
  if (name == "auto") return ToolFlavor::auto_detect;
  if (name == "ffmpeg") return ToolFlavor::ffmpeg;
  if (name == "avtool") return ToolFlavor::avtool;
  throw Error(ErrorCode::domain, "unknown media flavor: " + name);
}

void apply_policy_json(SegmentationPolicy& policy, const Json& j) {
  for (const auto& [key, value] : j.items()) {
    if (key == "clip_len_ms") {
      policy.clip_len_ms = value.get<Millis>();
    } else if (key == "min_tail_ms") {
      policy.min_tail_ms = value.get<Millis>();
    } else if (key == "rescue_empty") {
      policy.rescue_empty = value.get<bool>();
    } else if (key == "negative_single_sample") {
      policy.negative_single_sample = value.get<bool>();
    } else {
      throw Error(ErrorCode::parse, "unknown policy key: " + key);
    }
  }
}

void apply_media_json(MediaSettings& media, const Json& j) {
  for (const auto& [key, value] : j.items()) {
    if (key == "flavor") {
      media.toolchain.flavor = parse_flavor(value.get<std::string>());
    } else if (key == "cut_bin") {
      media.toolchain.cut_bin = value.get<std::string>();
    } else if (key == "probe_bin") {
      media.toolchain.probe_bin = value.get<std::string>();
    } else if (key == "container_ext") {
      media.toolchain.container_ext = value.get<std::string>();
    } else if (key == "jobs") {
      media.jobs = value.get<int>();
    } else if (key == "extract_audio") {
      media.extract_audio = value.get<bool>();
    } else {
      throw Error(ErrorCode::parse, "unknown media key: " + key);
    }
  }
}

}  // namespace

void RunConfig::apply_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::parse, "config root is not an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "manifest_path") {
      manifest_path = value.get<std::string>();
    } else if (key == "media_out_dir") {
      media_out_dir = value.get<std::string>();
    } else if (key == "dataset_out_path") {
      dataset_out_path = value.get<std::string>();
    } else if (key == "policy") {
      apply_policy_json(policy, value);
    } else if (key == "prompt_variant_id") {
      prompt_variant_id = value.get<std::string>();
    } else if (key == "endpoints") {
      if (!value.is_array()) throw Error(ErrorCode::parse, "config endpoints must be an array");
      endpoints.clear();
      for (const Json& entry : value) endpoints.push_back(ModelEndpoint::from_json(entry));
    } else if (key == "max_in_flight") {
      max_in_flight = value.get<int>();
    } else if (key == "tie_policy") {
      tie_policy = parse_tie_policy(value.get<std::string>());
    } else if (key == "abstain_policy") {
      abstain_policy = parse_abstain_policy(value.get<std::string>());
    } else if (key == "seed") {
      seed = value.get<std::uint64_t>();
    } else if (key == "media") {
      apply_media_json(media, value);
    } else {
      throw Error(ErrorCode::parse, "unknown config key: " + key);
    }
  }
}

RunConfig RunConfig::load_file(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::parse, path + ": " + e.what());
  }
  RunConfig config;
  config.apply_json(j);
  return config;
}

void RunConfig::check_paths() const {
  std::vector<std::pair<std::string, std::string>> paths;
  auto add = [&](const char* name, const std::string& value) {
    if (!value.empty()) paths.emplace_back(name, fs::path(value).lexically_normal().string());
  };
  add("manifest_path", manifest_path);
  add("media_out_dir", media_out_dir);
  add("dataset_out_path", dataset_out_path);
  for (std::size_t a = 0; a < paths.size(); ++a) {
    for (std::size_t b = a + 1; b < paths.size(); ++b) {
      if (paths[a].second == paths[b].second) {
        throw Error(ErrorCode::conflict, paths[a].first + " and " + paths[b].first +
                                             " point at the same path: " + paths[a].second);
      }
    }
  }
}

namespace {

std::string sanitize_stem(const std::string& video_id) {
  std::string stem = video_id;
  for (char& c : stem) {
    const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                    c == '.' || c == '_' || c == '-';
    if (!ok) c = '_';
  }
  return stem;
}

int effective_jobs(int configured, std::size_t n_tasks) {
  int jobs = configured;
  if (jobs <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    jobs = std::min(4, hw == 0 ? 1 : static_cast<int>(hw));
  }
  if (n_tasks < static_cast<std::size_t>(jobs)) jobs = static_cast<int>(n_tasks);
  return std::max(1, jobs);
}

}  // namespace

PreprocessResult run_preprocess(const RunConfig& config, PipelineMode mode) {
  if (config.manifest_path.empty()) {
    throw Error(ErrorCode::precondition, "manifest_path not set");
  }
  if (config.media_out_dir.empty()) {
    throw Error(ErrorCode::precondition, "media_out_dir not set");
  }
  config.check_paths();
  config.policy.check();
  StageTimer timer("preprocess");

  std::vector<VideoAnnotation> annotations = parse_manifest(read_file(config.manifest_path));
  const fs::path manifest_dir = fs::path(config.manifest_path).parent_path();
  const MediaToolchain toolchain = MediaToolchain::resolve(config.media.toolchain);

  const fs::path clip_dir = fs::path(config.media_out_dir) / "clips";
  fs::create_directories(clip_dir);

  struct PlannedCut {
    ClipSpec spec;
    std::string source;
    bool has_audio = false;
    std::string video_out;
    std::string audio_out;
  };

  Diagnostics diagnostics;
  std::vector<PlannedCut> cuts;
  std::set<std::string> used_stems;

  for (VideoAnnotation& ann : annotations) {
    fs::path media = ann.media_path;
    if (media.is_relative()) media = manifest_dir / media;
    ann.media_path = media.lexically_normal().string();

    try {
      const MediaInfo info = toolchain.probe(ann.media_path);
      std::vector<ClipSpec> plan;
      if (mode == PipelineMode::training) {
        const VideoAnnotation bound = validate(ann, info.duration_s, diagnostics);
        plan = plan_training_clips(bound, config.policy);
      } else {
        plan = plan_inference_clips(ann.video_id, info.duration_s, config.policy);
      }
      for (ClipSpec& spec : plan) {
        PlannedCut cut;
        const std::string stem = sanitize_stem(spec.video_id) + "_" +
                                 std::to_string(spec.window.start_ms) + "-" +
                                 std::to_string(spec.window.end_ms);
        if (!used_stems.insert(stem).second) {
          throw Error(ErrorCode::conflict, "clip filename collision: " + stem);
        }
        cut.video_out = (clip_dir / (stem + "." + toolchain.container_ext())).string();
        cut.audio_out = (clip_dir / (stem + ".wav")).string();
        cut.spec = std::move(spec);
        cut.source = ann.media_path;
        cut.has_audio = info.has_audio;
        cuts.push_back(std::move(cut));
      }
    } catch (const Error& e) {
      throw Error(e.code(), "video " + ann.video_id + ": " + error_message(e));
    }
  }

  std::vector<ClipRecord> records(cuts.size());
  if (!cuts.empty()) {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    std::optional<Error> first_error;

    auto worker = [&]() {
      for (;;) {
        if (failed.load()) return;
        const std::size_t i = next.fetch_add(1);
        if (i >= cuts.size()) return;
        const PlannedCut& cut = cuts[i];
        try {
          const ClipArtifact artifact =
              toolchain.cut(cut.source, cut.spec.clip_id, cut.spec.window, cut.video_out);
          ClipRecord record;
          record.clip_id = cut.spec.clip_id;
          record.video_id = cut.spec.video_id;
          record.window = cut.spec.window;
          record.label = cut.spec.label;
          record.video_path = artifact.video_path;
          record.measured_duration_s = artifact.measured_duration_s;
          if (cut.has_audio && config.media.extract_audio) {
            record.audio_path = toolchain.extract_audio(artifact.video_path, cut.audio_out);
          }
          records[i] = std::move(record);
        } catch (const Error& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) {
            first_error.emplace(e.code(), "clip " + cut.spec.clip_id + ": " + error_message(e));
          }
          failed.store(true);
        }
      }
    };

    std::vector<std::thread> pool;
    const int jobs = effective_jobs(config.media.jobs, cuts.size());
    pool.reserve(jobs);
    for (int w = 0; w < jobs; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) throw *first_error;
  }

  PreprocessResult result;
  result.videos = annotations.size();
  result.clips = records.size();
  result.warnings = diagnostics.warnings.size();
  result.records_path = (fs::path(config.media_out_dir) / "clips.jsonl").string();
  result.diagnostics_path = (fs::path(config.media_out_dir) / "diagnostics.json").string();

  write_clip_records(records, result.records_path);
  Json diag;
  diag["warnings"] = Json::array();
  for (const Warning& w : diagnostics.warnings) {
    diag["warnings"].push_back(Json{{"video_id", w.video_id}, {"code", w.code}, {"detail", w.detail}});
  }
  write_file_atomic(result.diagnostics_path, diag.dump(2) + "\n");

  timer.annotate("videos", result.videos);
  timer.annotate("clips", result.clips);
  timer.annotate("warnings", result.warnings);
  return result;
}

std::size_t run_build_dataset(const RunConfig& config, const std::string& records_path,
                              const std::string& out_path,
                              const std::optional<std::string>& system_message) {
  StageTimer timer("build_dataset");
  const PromptVariant& prompt = find_prompt(config.prompt_variant_id);
  const std::vector<ClipRecord> records = read_clip_records(records_path);
  std::vector<InstructionSample> samples;
  samples.reserve(records.size());
  for (const ClipRecord& record : records) samples.push_back(build_sample(record, prompt));
  DatasetWriteOptions options;
  options.system_message = system_message;
  const std::size_t written = write_jsonl(samples, out_path, options);
  timer.annotate("samples", written);
  return written;
}

InferSummary run_infer(const RunConfig& config, const std::string& records_path,
                       const std::string& out_path, const InferenceOptions& options) {
  if (config.endpoints.empty()) {
    throw Error(ErrorCode::precondition, "no endpoints configured");
  }
  StageTimer timer("infer");
  const PromptVariant& prompt = find_prompt(config.prompt_variant_id);
  const std::vector<ClipRecord> records = read_clip_records(records_path);
  const PredictionSet set =
      run_batch(records, config.endpoints, prompt, config.max_in_flight, options);
  write_predictions_jsonl(set, out_path);

  InferSummary summary;
  summary.clips = records.size();
  summary.models = config.endpoints.size();
  summary.predictions = set.prediction_count();
  summary.failures = set.failures.size();
  timer.annotate("clips", summary.clips);
  timer.annotate("models", summary.models);
  timer.annotate("failures", summary.failures);
  return summary;
}

Json video_prediction_to_json(const VideoPrediction& pred) {
  Json j;
  j["video_id"] = pred.video_id;
  j["model_id"] = pred.model_id;
  j["label"] = pred.label;
  j["clip_count"] = pred.clip_count;
  j["positive_clips"] = pred.positive_clips;
  return j;
}

VideoPrediction video_prediction_from_json(const Json& j) {
  VideoPrediction pred;
  pred.video_id = j.at("video_id").get<std::string>();
  pred.model_id = j.at("model_id").get<std::string>();
  pred.label = j.at("label").get<int>();
  pred.clip_count = j.at("clip_count").get<int>();
  pred.positive_clips = j.at("positive_clips").get<int>();
  if (pred.label != 0 && pred.label != 1) {
    throw Error(ErrorCode::domain, "video label out of {0,1}: " + pred.video_id);
  }
  if (pred.clip_count < 1 || pred.positive_clips < 0 || pred.positive_clips > pred.clip_count) {
    throw Error(ErrorCode::domain, "bad clip counts for video " + pred.video_id);
  }
  return pred;
}

std::size_t run_aggregate(const std::string& predictions_path, AbstainPolicy abstain_policy,
                          const std::string& out_path) {
  StageTimer timer("aggregate");
  const PredictionSet set = read_predictions_jsonl(predictions_path);
  std::vector<Json> rows;
  for (const auto& [model_id, preds] : set.by_model) {
    std::map<std::string, std::vector<int>> by_video;
    for (const auto& [clip_id, pred] : preds) {
      int verdict = 0;
      switch (pred.verdict) {
        case Verdict::positive: verdict = 1; break;
        case Verdict::negative: verdict = 0; break;
        case Verdict::abstain:
          if (abstain_policy == AbstainPolicy::strict) {
            throw Error(ErrorCode::domain, "abstain verdict for clip " + clip_id + " (model " +
                                               model_id + ") under strict abstain policy");
          }
          verdict = 0;
          break;
      }
      by_video[pred.video_id].push_back(verdict);
    }
    for (const auto& [video_id, verdicts] : by_video) {
      rows.push_back(video_prediction_to_json(aggregate_video(video_id, verdicts, model_id)));
    }
  }
  write_jsonl_file(out_path, rows);
  timer.annotate("rows", rows.size());
  return rows.size();
}

std::size_t run_vote(const std::string& video_predictions_path, TiePolicy tie_policy,
                     const std::string& out_path) {
  StageTimer timer("vote");
  // model -> video -> prediction
  std::map<std::string, std::map<std::string, VideoPrediction>> by_model;
  std::set<std::string> videos;
  for_each_jsonl(read_file(video_predictions_path), [&](std::size_t line_no, const Json& j) {
    VideoPrediction pred;
    try {
      pred = video_prediction_from_json(j);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::parse,
                  "line " + std::to_string(line_no) + ": bad video prediction: " + e.what());
    }
    if (pred.model_id == kEnsembleModelId) {
      throw Error(ErrorCode::conflict,
                  "line " + std::to_string(line_no) + ": input already contains ensemble rows");
    }
    if (!by_model[pred.model_id].emplace(pred.video_id, pred).second) {
      throw Error(ErrorCode::conflict, "duplicate prediction for video " + pred.video_id +
                                           " from model " + pred.model_id);
    }
    videos.insert(pred.video_id);
  });
  if (by_model.empty()) {
    throw Error(ErrorCode::precondition, "no video predictions to vote over");
  }

  std::vector<std::string> missing;
  for (const auto& [model_id, preds] : by_model) {
    for (const std::string& video_id : videos) {
      if (!preds.count(video_id)) missing.push_back(model_id + "/" + video_id);
    }
  }
  if (!missing.empty()) {
    std::string detail;
    for (const std::string& m : missing) detail += " " + m;
    throw Error(ErrorCode::coverage, "models missing video predictions:" + detail);
  }

  std::vector<Json> rows;
  for (const auto& [model_id, preds] : by_model) {
    for (const auto& [video_id, pred] : preds) rows.push_back(video_prediction_to_json(pred));
  }
  for (const std::string& video_id : videos) {
    std::vector<int> labels;
    labels.reserve(by_model.size());
    int positives = 0;
    for (const auto& [model_id, preds] : by_model) {
      const int label = preds.at(video_id).label;
      labels.push_back(label);
      positives += label;
    }
    VideoPrediction fused;
    fused.video_id = video_id;
    fused.model_id = kEnsembleModelId;
    fused.label = majority_vote(labels, tie_policy);
    fused.clip_count = static_cast<int>(labels.size());
    fused.positive_clips = positives;
    rows.push_back(video_prediction_to_json(fused));
  }
  write_jsonl_file(out_path, rows);
  timer.annotate("videos", videos.size());
  timer.annotate("models", by_model.size());
  return videos.size();
}

Json run_evaluate(const std::string& video_predictions_path, const std::string& manifest_path,
                  const std::optional<std::string>& out_path) {
  StageTimer timer("evaluate");
  std::map<std::string, std::map<std::string, int>> labels_by_model;
  for_each_jsonl(read_file(video_predictions_path), [&](std::size_t line_no, const Json& j) {
    VideoPrediction pred;
    try {
      pred = video_prediction_from_json(j);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::parse,
                  "line " + std::to_string(line_no) + ": bad video prediction: " + e.what());
    }
    if (!labels_by_model[pred.model_id].emplace(pred.video_id, pred.label).second) {
      throw Error(ErrorCode::conflict, "duplicate prediction for video " + pred.video_id +
                                           " from model " + pred.model_id);
    }
  });
  if (labels_by_model.empty()) {
    throw Error(ErrorCode::precondition, "no video predictions to evaluate");
  }

  std::map<std::string, int> truth;
  for (const VideoAnnotation& ann : parse_manifest(read_file(manifest_path))) {
    truth[ann.video_id] = ann.global_label;
  }

  // Per-model rows in id order, the fused row last.
  std::vector<std::string> model_order;
  for (const auto& [model_id, _] : labels_by_model) {
    if (model_id != kEnsembleModelId) model_order.push_back(model_id);
  }
  if (labels_by_model.count(kEnsembleModelId)) model_order.push_back(kEnsembleModelId);

  Json report;
  report["videos_evaluated"] = truth.size();
  report["rows"] = Json::array();
  for (const std::string& model_id : model_order) {
    MetricsReport metrics;
    try {
      metrics = compute_metrics(labels_by_model.at(model_id), truth);
    } catch (const Error& e) {
      throw Error(e.code(), "model " + model_id + ": " + error_message(e));
    }
    Json row;
    row["model_id"] = model_id;
    row["accuracy"] = metrics.accuracy;
    row["precision"] = metrics.precision;
    row["recall"] = metrics.recall;
    row["f1"] = metrics.f1;
    row["undefined_precision"] = metrics.undefined_precision;
    row["undefined_recall"] = metrics.undefined_recall;
    row["counts"] = Json{{"tp", metrics.counts.tp},
                         {"fp", metrics.counts.fp},
                         {"fn", metrics.counts.fn},
                         {"tn", metrics.counts.tn}};
    report["rows"].push_back(row);
  }
  if (out_path) write_file_atomic(*out_path, report.dump(2) + "\n");
  timer.annotate("models", model_order.size());
  return report;
}

Json run_simulate_ensemble(const std::vector<double>& per_model_accuracy, int n_videos,
                           std::uint64_t seed, TiePolicy tie_policy,
                           const std::optional<std::string>& out_path) {
  StageTimer timer("simulate_ensemble");
  const double vote_accuracy = simulate_ensemble(per_model_accuracy, n_videos, seed, tie_policy);
  Json report;
  report["per_model_accuracy"] = per_model_accuracy;
  report["n_videos"] = n_videos;
  report["seed"] = seed;
  report["tie_policy"] = to_string(tie_policy);
  report["vote_accuracy"] = vote_accuracy;
  // Real model errors correlate, so this is a mechanism check, not a forecast.
  report["assumes_independent_models"] = true;
  if (out_path) write_file_atomic(*out_path, report.dump(2) + "\n");
  return report;
}

namespace {

std::vector<TimeInterval> gen_fixture_segments(std::mt19937_64& rng, Millis duration_ms,
                                               int n_segments) {
  // Keep segments out of the last second so a discarded tail window can never
  // swallow one entirely.
  const Millis usable = duration_ms - 1000;
  const Millis band = usable / n_segments;
  std::vector<TimeInterval> segments;
  for (int k = 0; k < n_segments; ++k) {
    const Millis band_start = k * band;
    const Millis start = band_start + static_cast<Millis>(rng() % static_cast<std::uint64_t>(band / 3));
    const Millis len = 500 + static_cast<Millis>(rng() % static_cast<std::uint64_t>(band / 2));
    const Millis end = std::min(start + len, band_start + band);
    segments.push_back(TimeInterval::from_millis(start, end));
  }
  return segments;
}

}  // namespace

GenFixturesResult run_gen_fixtures(const std::string& out_dir, int count, std::uint64_t seed,
                                   const MediaSettings& media) {
  if (count < 1) throw Error(ErrorCode::domain, "fixture count must be >= 1");
  StageTimer timer("gen_fixtures");
  const MediaToolchain toolchain = MediaToolchain::resolve(media.toolchain);
  fs::create_directories(out_dir);

  std::mt19937_64 rng(seed);
  std::vector<Json> manifest_rows;
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "fixture_%03d", i);
    const Millis duration_ms = 3000 + static_cast<Millis>(rng() % 7001);
    const int label = i % 2;
    FixtureSpec spec;
    spec.duration_s = to_seconds(duration_ms);
    spec.with_audio = (i % 4) != 3;

    const std::string file_name = std::string(name) + "." + toolchain.container_ext();
    toolchain.gen_fixture(spec, (fs::path(out_dir) / file_name).string());

    Json segments = Json::array();
    if (label == 1) {
      const int n_segments = 1 + static_cast<int>(rng() % 2);
      for (const TimeInterval& seg : gen_fixture_segments(rng, duration_ms, n_segments)) {
        segments.push_back(Json::array({seg.start_s(), seg.end_s()}));
      }
    }
    Json row;
    row["video_id"] = name;
    row["path"] = file_name;
    row["label"] = label;
    row["segments"] = segments;
    manifest_rows.push_back(std::move(row));
  }

  GenFixturesResult result;
  result.videos = static_cast<std::size_t>(count);
  result.manifest_path = (fs::path(out_dir) / "manifest.jsonl").string();
  write_jsonl_file(result.manifest_path, manifest_rows);
  timer.annotate("videos", count);
  return result;
}

}  // namespace ah
