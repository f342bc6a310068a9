#include "ah/dataset.hpp"

#include <cstdio>
#include <filesystem>

#include "ah/errors.hpp"
#include "ah/jsonl.hpp"

namespace ah {

const std::vector<PromptVariant>& prompt_registry() {
  static const std::vector<PromptVariant> registry = {
      {"v1",
       "Does the person in this clip show ambivalence or hesitancy? Answer only with "
       "<answer>Yes</answer> or <answer>No</answer>."},
      {"v2",
       "Ambivalence/hesitancy is a conflicted emotional state in which a person "
       "simultaneously holds positive and negative attitudes toward a behavior or decision, "
       "often visible as mismatches between facial expression, tone of voice, and wording, or "
       "as wavering within one of them. Watch and listen to this clip and decide whether the "
       "person shows ambivalence or hesitancy. Respond only with <answer>Yes</answer> or "
       "<answer>No</answer>."},
  };
  return registry;
}

const PromptVariant& find_prompt(const std::string& variant_id) {
  for (const PromptVariant& variant : prompt_registry()) {
    if (variant.variant_id == variant_id) {
      return variant;
    }
  }
  throw Error(ErrorCode::domain, "unknown prompt variant '" + variant_id + "'");
}

InstructionSample build_sample(const ClipRecord& clip, const PromptVariant& prompt) {
  if (!clip.label) {
    throw Error(ErrorCode::precondition, "clip " + clip.clip_id + " has no label");
  }
  if (!std::filesystem::exists(clip.video_path)) {
    throw Error(ErrorCode::io,
                "clip " + clip.clip_id + " video file missing: " + clip.video_path);
  }
  InstructionSample sample;
  sample.clip_id = clip.clip_id;
  sample.video_ref = clip.video_path;
  sample.audio_ref = clip.audio_path;
  sample.prompt_variant_id = prompt.variant_id;
  sample.prompt_text = prompt.text;
  sample.target = (*clip.label == 1) ? kAnswerYes : kAnswerNo;
  return sample;
}

std::size_t write_jsonl(const std::vector<InstructionSample>& samples, const std::string& path,
                        const DatasetWriteOptions& options) {
  std::vector<Json> rows;
  rows.reserve(samples.size());
  for (const InstructionSample& sample : samples) {
    if (sample.target != kAnswerYes && sample.target != kAnswerNo) {
      throw Error(ErrorCode::domain,
                  "sample " + sample.clip_id + " has a malformed target: " + sample.target);
    }
    std::string content = "<video>";
    if (sample.audio_ref) {
      content += "<audio>";
    }
    content += sample.prompt_text;

    Json row;
    row["messages"] = Json::array();
    if (options.system_message) {
      row["messages"].push_back({{"role", "system"}, {"content", *options.system_message}});
    }
    row["messages"].push_back({{"role", "user"}, {"content", content}});
    row["messages"].push_back({{"role", "assistant"}, {"content", sample.target}});
    row["videos"] = Json::array({sample.video_ref});
    if (sample.audio_ref) {
      row["audios"] = Json::array({*sample.audio_ref});
    }
    rows.push_back(std::move(row));
  }
  return write_jsonl_file(path, rows);
}

TrainStrategy parse_strategy(const std::string& name) {
  if (name == "lora") {
    return TrainStrategy::lora;
  }
  if (name == "full") {
    return TrainStrategy::full;
  }
  throw Error(ErrorCode::domain, "unknown fine-tuning strategy '" + name + "'");
}

const char* to_string(TrainStrategy strategy) {
  return strategy == TrainStrategy::lora ? "lora" : "full";
}

TrainConfig emit_train_config(TrainStrategy strategy, std::optional<int> epochs_override) {
  TrainConfig config;
  config.strategy = strategy;
  if (strategy == TrainStrategy::lora) {
    config.learning_rate = 1e-5;
    config.epochs = 1;
    config.lora_rank = 8;
    config.lora_alpha = 32;
    if (epochs_override && *epochs_override != 1) {
      throw Error(ErrorCode::domain, "lora fine-tuning runs exactly 1 epoch");
    }
  } else {
    config.learning_rate = 1e-6;
    config.epochs = epochs_override.value_or(2);
    if (config.epochs < 2 || config.epochs > 3) {
      throw Error(ErrorCode::domain, "full fine-tuning epochs must be 2 or 3, got " +
                                         std::to_string(config.epochs));
    }
  }
  return config;
}

std::string render_train_config(const TrainConfig& config) {
  char lr[32];
  std::snprintf(lr, sizeof(lr), "%g", config.learning_rate);

  std::string out;
  out += std::string("strategy=") + to_string(config.strategy) + "\n";
  out += std::string("learning_rate=") + lr + "\n";
  out += "epochs=" + std::to_string(config.epochs) + "\n";
  out += "per_device_batch_size=" + std::to_string(config.per_device_batch) + "\n";
  out += "gradient_accumulation_steps=" + std::to_string(config.grad_accum) + "\n";
  if (config.lora_rank) {
    out += "lora_rank=" + std::to_string(*config.lora_rank) + "\n";
  }
  if (config.lora_alpha) {
    out += "lora_alpha=" + std::to_string(*config.lora_alpha) + "\n";
  }
  out += "precision=" + config.precision_tag + "\n";
  out += std::string("flash_attention=") + (config.flash_attention ? "true" : "false") + "\n";
  out += "max_length=" + std::to_string(config.max_length) + "\n";
  return out;
}

void write_train_config(const TrainConfig& config, const std::string& path) {
  write_file_atomic(path, render_train_config(config));
}

}  // namespace ah
