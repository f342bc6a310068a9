#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ah/clips.hpp"

namespace ah {

/// A registered wording of the binary A/H question. The registry keeps the
/// choice explicit and auditable; samples record which variant they used.
struct PromptVariant {
  std::string variant_id;
  std::string text;
};

const std::vector<PromptVariant>& prompt_registry();
const PromptVariant& find_prompt(const std::string& variant_id);

inline constexpr const char* kAnswerYes = "<answer>Yes</answer>";
inline constexpr const char* kAnswerNo = "<answer>No</answer>";

/// One multimodal conversation: clip media plus the task prompt, answered by
/// the exact constrained target string.
struct InstructionSample {
  std::string clip_id;
  std::string video_ref;
  std::optional<std::string> audio_ref;
  std::string prompt_variant_id;
  std::string prompt_text;
  std::string target;  // kAnswerYes or kAnswerNo, nothing else
};

/// Builds a sample from a labeled, materialized clip. Unlabeled clips are a
/// precondition error; a missing video file is an I/O error.
InstructionSample build_sample(const ClipRecord& clip, const PromptVariant& prompt);

struct DatasetWriteOptions {
  std::optional<std::string> system_message;
};

/// Emits the conversation-format JSONL consumed by the training launcher:
/// {"messages":[{"role":"user","content":"<video><audio>PROMPT"},
///              {"role":"assistant","content":TARGET}],
///  "videos":[...], "audios":[...]}
/// Key order is fixed, so identical input produces identical bytes.
std::size_t write_jsonl(const std::vector<InstructionSample>& samples, const std::string& path,
                        const DatasetWriteOptions& options = {});

enum class TrainStrategy { lora, full };

TrainStrategy parse_strategy(const std::string& name);
const char* to_string(TrainStrategy strategy);

struct TrainConfig {
  TrainStrategy strategy = TrainStrategy::lora;
  double learning_rate = 0.0;
  int epochs = 0;
  int per_device_batch = 2;
  int grad_accum = 32;
  std::optional<int> lora_rank;
  std::optional<int> lora_alpha;
  std::string precision_tag = "bfloat16";
  bool flash_attention = true;
  int max_length = 32768;
};

/// Published hyperparameters per fine-tuning strategy. The epochs override is
/// only meaningful for full fine-tuning (2 or 3).
TrainConfig emit_train_config(TrainStrategy strategy,
                              std::optional<int> epochs_override = std::nullopt);

/// Flat key=value rendering consumable as launcher arguments.
std::string render_train_config(const TrainConfig& config);
void write_train_config(const TrainConfig& config, const std::string& path);

}  // namespace ah
