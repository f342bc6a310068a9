#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ah {

/// Video-level verdict obtained from clip verdicts (single model) or from
/// fusing several models' video labels.
struct VideoPrediction {
  std::string video_id;
  int label = 0;
  int clip_count = 0;
  int positive_clips = 0;
  std::string model_id;  // a model id or "ensemble"
};

inline constexpr const char* kEnsembleModelId = "ensemble";

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  std::int64_t total() const { return tp + fp + fn + tn; }
};

struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool undefined_precision = false;
  bool undefined_recall = false;
  ConfusionCounts counts;
};

enum class TiePolicy { positive, negative, error };

TiePolicy parse_tie_policy(const std::string& name);
const char* to_string(TiePolicy policy);

/// A video is positive as soon as any of its clips is: label = max over the
/// clip verdicts. Abstains must already be mapped to {0,1} upstream.
VideoPrediction aggregate_video(const std::string& video_id,
                                const std::vector<int>& clip_verdicts,
                                const std::string& model_id);

/// Label held by strictly more than half of the models; exact ties resolve
/// per the tie policy.
int majority_vote(const std::vector<int>& per_model_labels, TiePolicy tie_policy);

/// Standard binary classification metrics over exactly matching key sets.
/// Zero-denominator metrics come back as 0 with their flag set.
MetricsReport compute_metrics(const std::map<std::string, int>& predictions,
                              const std::map<std::string, int>& ground_truth);

/// Simulates K independent models with the given per-model accuracies voting
/// over n videos; returns the fraction of correctly voted videos.
/// Deterministic for a given seed, across platforms.
double simulate_ensemble(const std::vector<double>& per_model_accuracy, int n_videos,
                         std::uint64_t seed, TiePolicy tie_policy = TiePolicy::positive);

}  // namespace ah
