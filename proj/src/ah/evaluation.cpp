#include "ah/evaluation.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "ah/errors.hpp"

namespace ah {

TiePolicy parse_tie_policy(const std::string& name) {
  if (name == "positive") return TiePolicy::positive;
  if (name == "negative") return TiePolicy::negative;
  if (name == "error") return TiePolicy::error;
  throw Error(ErrorCode::domain, "unknown tie policy: " + name);
}

const char* to_string(TiePolicy policy) {
  switch (policy) {
    case TiePolicy::positive: return "positive";
    case TiePolicy::negative: return "negative";
    case TiePolicy::error: return "error";
  }
  return "?";
}

VideoPrediction aggregate_video(const std::string& video_id,
                                const std::vector<int>& clip_verdicts,
                                const std::string& model_id) {
  if (clip_verdicts.empty()) {
    throw Error(ErrorCode::precondition, "no clip verdicts for video " + video_id);
  }
  VideoPrediction pred;
  pred.video_id = video_id;
  pred.model_id = model_id;
  pred.clip_count = static_cast<int>(clip_verdicts.size());
  for (int v : clip_verdicts) {
    if (v != 0 && v != 1) {
      throw Error(ErrorCode::domain, "clip verdict out of {0,1} for video " + video_id);
    }
    pred.positive_clips += v;
  }
  pred.label = pred.positive_clips > 0 ? 1 : 0;
  return pred;
}

int majority_vote(const std::vector<int>& per_model_labels, TiePolicy tie_policy) {
  if (per_model_labels.empty()) {
    throw Error(ErrorCode::precondition, "majority vote over zero models");
  }
  int positives = 0;
  for (int v : per_model_labels) {
    if (v != 0 && v != 1) throw Error(ErrorCode::domain, "vote label out of {0,1}");
    positives += v;
  }
  const int n = static_cast<int>(per_model_labels.size());
  const int negatives = n - positives;
  if (positives > negatives) return 1;
  if (negatives > positives) return 0;
  switch (tie_policy) {
    case TiePolicy::positive: return 1;
    case TiePolicy::negative: return 0;
    case TiePolicy::error: break;
  }
  std::ostringstream msg;
  msg << "split vote " << positives << "/" << n;
  throw Error(ErrorCode::tie, msg.str());
}

namespace {

void require_same_keys(const std::map<std::string, int>& predictions,
                       const std::map<std::string, int>& ground_truth) {
  std::vector<std::string> missing;  // in truth, not predicted
  std::vector<std::string> extra;    // predicted, not in truth
  for (const auto& [id, _] : ground_truth) {
    if (!predictions.count(id)) missing.push_back(id);
  }
  for (const auto& [id, _] : predictions) {
    if (!ground_truth.count(id)) extra.push_back(id);
  }
  if (missing.empty() && extra.empty()) return;
  std::ostringstream msg;
  msg << "prediction/truth id mismatch";
  if (!missing.empty()) {
    msg << "; missing predictions for:";
    for (const auto& id : missing) msg << " " << id;
  }
  if (!extra.empty()) {
    msg << "; predictions without truth:";
    for (const auto& id : extra) msg << " " << id;
  }
  throw Error(ErrorCode::coverage, msg.str());
}

}  // namespace

MetricsReport compute_metrics(const std::map<std::string, int>& predictions,
                              const std::map<std::string, int>& ground_truth) {
  if (ground_truth.empty()) {
    throw Error(ErrorCode::precondition, "empty ground truth");
  }
  require_same_keys(predictions, ground_truth);

  MetricsReport report;
  auto& c = report.counts;
  for (const auto& [id, truth] : ground_truth) {
    if (truth != 0 && truth != 1) throw Error(ErrorCode::domain, "truth label out of {0,1}: " + id);
    const int pred = predictions.at(id);
    if (pred != 0 && pred != 1) throw Error(ErrorCode::domain, "predicted label out of {0,1}: " + id);
    if (truth == 1) {
      (pred == 1 ? c.tp : c.fn)++;
    } else {
      (pred == 1 ? c.fp : c.tn)++;
    }
  }

  report.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  if (c.tp + c.fp == 0) {
    report.undefined_precision = true;
  } else {
    report.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  }
  if (c.tp + c.fn == 0) {
    report.undefined_recall = true;
  } else {
    report.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  }
  if (report.precision + report.recall > 0.0) {
    report.f1 = 2.0 * report.precision * report.recall / (report.precision + report.recall);
  }
  return report;
}

namespace {

// Uniform in [0,1) from the top 53 bits of the generator's output. Avoids
// std::uniform_real_distribution, whose output differs across libraries.
double next_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

double simulate_ensemble(const std::vector<double>& per_model_accuracy, int n_videos,
                         std::uint64_t seed, TiePolicy tie_policy) {
  if (per_model_accuracy.empty()) {
    throw Error(ErrorCode::precondition, "no model accuracies given");
  }
  for (double p : per_model_accuracy) {
    if (!(p > 0.0) || p > 1.0) {
      throw Error(ErrorCode::domain, "model accuracy outside (0,1]");
    }
  }
  if (n_videos < 1) throw Error(ErrorCode::domain, "n_videos must be >= 1");

  std::mt19937_64 rng(seed);
  std::vector<int> labels(per_model_accuracy.size());
  std::int64_t correct = 0;
  for (int i = 0; i < n_videos; ++i) {
    const int truth = next_uniform(rng) < 0.5 ? 1 : 0;
    for (std::size_t k = 0; k < per_model_accuracy.size(); ++k) {
      const bool right = next_uniform(rng) < per_model_accuracy[k];
      labels[k] = right ? truth : 1 - truth;
    }
    if (majority_vote(labels, tie_policy) == truth) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n_videos);
}

}  // namespace ah
