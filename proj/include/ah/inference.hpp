#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ah/clips.hpp"
#include "ah/dataset.hpp"
#include "ah/jsonl.hpp"

namespace ah {

struct ModelEndpoint {
  std::string model_id;
  std::string base_url;        // e.g. http://127.0.0.1:8041
  std::string auth_token_env;  // empty = no auth header
  double timeout_s = 30.0;
  int max_retries = 3;
  double backoff_base_s = 0.5;

  static ModelEndpoint from_json(const Json& j);
  Json to_json() const;
};

enum class Verdict { positive, negative, abstain };

const char* to_string(Verdict v);
Verdict parse_verdict_name(const std::string& name);

struct ClipPrediction {
  std::string clip_id;
  std::string video_id;
  std::string model_id;
  Verdict verdict = Verdict::abstain;
  std::string raw_text;
  std::int64_t latency_ms = 0;
};

/// First <answer>...</answer> wins; tag and payload are ASCII case-insensitive
/// and payload whitespace is ignored. Anything else is an abstain, never an
/// error.
Verdict parse_answer(const std::string& text);

enum class MediaMode { inline_base64, url_reference };

struct InferenceOptions {
  MediaMode media_mode = MediaMode::inline_base64;
  double temperature = 0.0;
  int max_tokens = 16;
};

/// Chat-completions request body for one clip: media content parts first,
/// prompt text last. The clip id rides along in the `user` field.
Json build_chat_request(const ClipRecord& clip, const PromptVariant& prompt,
                        const std::string& model_id, const InferenceOptions& options);

ClipPrediction predict_clip(const ModelEndpoint& endpoint, const ClipRecord& clip,
                            const PromptVariant& prompt,
                            const InferenceOptions& options = {});

struct FailureRecord {
  std::string clip_id;
  std::string model_id;
  std::string kind;  // transport | endpoint | format
  std::string detail;
};

struct PredictionSet {
  // model_id -> clip_id -> prediction
  std::map<std::string, std::map<std::string, ClipPrediction>> by_model;
  std::vector<FailureRecord> failures;

  std::size_t prediction_count() const;
};

/// Queries every endpoint about every clip, keeping at most max_in_flight
/// requests outstanding per endpoint. Per-item failures land in the ledger;
/// |predictions| + |failures| always equals |clips| * |endpoints|.
PredictionSet run_batch(const std::vector<ClipRecord>& clips,
                        const std::vector<ModelEndpoint>& endpoints,
                        const PromptVariant& prompt, int max_in_flight,
                        const InferenceOptions& options = {});

// Prediction rows travel between the infer and aggregate stages as JSONL.
Json prediction_to_json(const ClipPrediction& pred);
ClipPrediction prediction_from_json(const Json& j);
Json failure_to_json(const FailureRecord& failure);

void write_predictions_jsonl(const PredictionSet& set, const std::string& path);
PredictionSet read_predictions_jsonl(const std::string& path);

std::vector<ModelEndpoint> load_endpoints_file(const std::string& path);

}  // namespace ah
