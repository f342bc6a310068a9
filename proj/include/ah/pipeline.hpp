#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ah/evaluation.hpp"
#include "ah/inference.hpp"
#include "ah/jsonl.hpp"
#include "ah/media.hpp"
#include "ah/segmenter.hpp"

namespace ah {

enum class AbstainPolicy { negative, strict };

AbstainPolicy parse_abstain_policy(const std::string& name);
const char* to_string(AbstainPolicy policy);

struct MediaSettings {
  ToolchainConfig toolchain;
  int jobs = 0;  // 0 = pick from hardware concurrency
  bool extract_audio = true;
};

struct RunConfig {
  std::string manifest_path;
  std::string media_out_dir;
  std::string dataset_out_path;
  SegmentationPolicy policy = SegmentationPolicy::training_defaults();
  std::string prompt_variant_id = "v1";
  std::vector<ModelEndpoint> endpoints;
  int max_in_flight = 4;
  TiePolicy tie_policy = TiePolicy::positive;
  AbstainPolicy abstain_policy = AbstainPolicy::negative;
  std::uint64_t seed = 0;
  MediaSettings media;

  /// Applies keys present in `j` on top of current values; unknown keys are
  /// an error so config typos fail loudly.
  void apply_json(const Json& j);
  static RunConfig load_file(const std::string& path);

  /// The configured output paths must not collide with each other or inputs.
  void check_paths() const;
};

enum class PipelineMode { training, inference };

PipelineMode parse_pipeline_mode(const std::string& name);

struct PreprocessResult {
  std::size_t videos = 0;
  std::size_t clips = 0;
  std::size_t warnings = 0;
  std::string records_path;
  std::string diagnostics_path;
};

/// Manifest -> validated annotations -> clip plan -> cut media (+ per-clip
/// audio where the source has an audio stream). Training mode labels clips
/// via annotated segments; inference mode partitions whole videos unlabeled.
PreprocessResult run_preprocess(const RunConfig& config, PipelineMode mode);

/// Clip records -> instruction samples JSONL. Every record must be labeled.
std::size_t run_build_dataset(const RunConfig& config, const std::string& records_path,
                              const std::string& out_path,
                              const std::optional<std::string>& system_message = std::nullopt);

struct InferSummary {
  std::size_t clips = 0;
  std::size_t models = 0;
  std::size_t predictions = 0;
  std::size_t failures = 0;
};

InferSummary run_infer(const RunConfig& config, const std::string& records_path,
                       const std::string& out_path, const InferenceOptions& options = {});

/// Clip predictions -> per-(model, video) labels via the any-positive rule.
std::size_t run_aggregate(const std::string& predictions_path, AbstainPolicy abstain_policy,
                          const std::string& out_path);

/// Per-model video labels -> same rows plus one "ensemble" row per video.
std::size_t run_vote(const std::string& video_predictions_path, TiePolicy tie_policy,
                     const std::string& out_path);

/// Video labels + manifest ground truth -> metrics report (one row per model,
/// ensemble last). Returns the report document.
Json run_evaluate(const std::string& video_predictions_path, const std::string& manifest_path,
                  const std::optional<std::string>& out_path = std::nullopt);

Json run_simulate_ensemble(const std::vector<double>& per_model_accuracy, int n_videos,
                           std::uint64_t seed, TiePolicy tie_policy,
                           const std::optional<std::string>& out_path = std::nullopt);

struct GenFixturesResult {
  std::size_t videos = 0;
  std::string manifest_path;
};

/// Deterministic synthetic corpus: alternating labels, one video in four
/// without audio, durations 3..10s, positives carrying 1-2 annotated
/// segments placed clear of the trailing second.
GenFixturesResult run_gen_fixtures(const std::string& out_dir, int count, std::uint64_t seed,
                                   const MediaSettings& media);

// Row format shared by aggregate, vote, and evaluate.
Json video_prediction_to_json(const VideoPrediction& pred);
VideoPrediction video_prediction_from_json(const Json& j);

}  // namespace ah
