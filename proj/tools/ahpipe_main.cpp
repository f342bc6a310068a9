// Command-line front end wiring the pipeline stages together. Every
// subcommand reads flat files and writes flat files, so stages compose in
// shell scripts and stay separately testable.
//
// Exit codes: 0 success, 1 fatal error, 2 finished with per-item failures
// under --strict.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ah/dataset.hpp"
#include "ah/errors.hpp"
#include "ah/log.hpp"
#include "ah/pipeline.hpp"

namespace {

struct GlobalFlags {
  bool quiet = false;
  bool verbose = false;

  void apply() const {
    if (quiet) {
      ah::set_log_level(ah::LogLevel::quiet);
    } else if (verbose) {
      ah::set_log_level(ah::LogLevel::debug);
    }
  }
};

struct MediaFlags {
  std::string flavor;
  std::string cut_bin;
  std::string probe_bin;
  std::string container_ext;
  int jobs = 0;
  bool no_audio = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--media-flavor", flavor, "media toolchain: auto, ffmpeg, or avtool");
    cmd->add_option("--cut-bin", cut_bin, "cutter binary (ffmpeg or avtool)");
    cmd->add_option("--probe-bin", probe_bin, "prober binary (ffprobe)");
    cmd->add_option("--container-ext", container_ext, "clip container extension");
    cmd->add_option("--jobs", jobs, "parallel cut processes (0 = auto)");
    cmd->add_flag("--no-audio", no_audio, "skip per-clip audio extraction");
  }

  void apply(ah::MediaSettings& media) const {
    ah::Json overrides = ah::Json::object();
    if (!flavor.empty()) overrides["flavor"] = flavor;
    if (!cut_bin.empty()) overrides["cut_bin"] = cut_bin;
    if (!probe_bin.empty()) overrides["probe_bin"] = probe_bin;
    if (!container_ext.empty()) overrides["container_ext"] = container_ext;
    if (jobs > 0) overrides["jobs"] = jobs;
    ah::MediaSettings updated = media;
    // reuse the config-file parser so flags and file share validation
    {
      ah::RunConfig scratch;
      scratch.media = updated;
      scratch.apply_json(ah::Json{{"media", overrides}});
      updated = scratch.media;
    }
    if (no_audio) updated.extract_audio = false;
    media = updated;
  }
};

ah::RunConfig load_config_or_default(const std::string& config_path) {
  if (config_path.empty()) return ah::RunConfig{};
  return ah::RunConfig::load_file(config_path);
}

std::string records_path_or_default(const std::string& flag_value, const ah::RunConfig& config) {
  if (!flag_value.empty()) return flag_value;
  if (!config.media_out_dir.empty()) return config.media_out_dir + "/clips.jsonl";
  throw ah::Error(ah::ErrorCode::precondition,
                  "no clip records path: pass --records or set media_out_dir in the config");
}

void print_json(const ah::Json& doc) { std::printf("%s\n", doc.dump(2).c_str()); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clip-level recognition pipeline: preprocess, infer, vote, evaluate"};
  app.require_subcommand(1);

  GlobalFlags global;
  app.add_flag("--quiet", global.quiet, "log errors only");
  app.add_flag("--verbose", global.verbose, "log debug detail");

  int exit_code = 0;

  // ---- preprocess ---------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("preprocess", "cut annotated videos into labeled clips");
    auto config_path = std::make_shared<std::string>();
    auto manifest = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>();
    auto mode_name = std::make_shared<std::string>();
    auto clip_len_ms = std::make_shared<std::int64_t>(-1);
    auto min_tail_ms = std::make_shared<std::int64_t>(-1);
    auto negative_single = std::make_shared<bool>(false);
    auto media = std::make_shared<MediaFlags>();
    cmd->add_option("--config", *config_path, "run configuration JSON");
    cmd->add_option("--manifest", *manifest, "annotation manifest JSONL");
    cmd->add_option("--out-dir", *out_dir, "output directory for clips and records");
    cmd->add_option("--mode", *mode_name, "training or inference")->required();
    cmd->add_option("--clip-len-ms", *clip_len_ms, "window length in milliseconds");
    cmd->add_option("--min-tail-ms", *min_tail_ms, "minimum trailing window to keep");
    cmd->add_flag("--negative-single-sample", *negative_single,
                  "keep each negative video whole instead of splitting");
    media->attach(cmd);
    cmd->callback([=, &global]() {
      global.apply();
      const ah::PipelineMode mode = ah::parse_pipeline_mode(*mode_name);
      ah::RunConfig config = load_config_or_default(*config_path);
      if (config_path->empty()) {
        config.policy = mode == ah::PipelineMode::training
                            ? ah::SegmentationPolicy::training_defaults()
                            : ah::SegmentationPolicy::inference_defaults();
      } else if (mode == ah::PipelineMode::inference) {
        config.policy.rescue_empty = true;
      }
      if (!manifest->empty()) config.manifest_path = *manifest;
      if (!out_dir->empty()) config.media_out_dir = *out_dir;
      if (*clip_len_ms >= 0) config.policy.clip_len_ms = *clip_len_ms;
      if (*min_tail_ms >= 0) config.policy.min_tail_ms = *min_tail_ms;
      if (*negative_single) config.policy.negative_single_sample = true;
      media->apply(config.media);
      const ah::PreprocessResult result = ah::run_preprocess(config, mode);
      ah::Json summary;
      summary["videos"] = result.videos;
      summary["clips"] = result.clips;
      summary["warnings"] = result.warnings;
      summary["records_path"] = result.records_path;
      summary["diagnostics_path"] = result.diagnostics_path;
      print_json(summary);
    });
  }

  // ---- build-dataset ------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("build-dataset", "emit instruction samples from clip records");
    auto config_path = std::make_shared<std::string>();
    auto records = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    auto prompt = std::make_shared<std::string>();
    auto system_message = std::make_shared<std::string>();
    cmd->add_option("--config", *config_path, "run configuration JSON");
    cmd->add_option("--records", *records, "clip records JSONL from preprocess");
    cmd->add_option("--out", *out_path, "dataset JSONL to write");
    cmd->add_option("--prompt", *prompt, "prompt variant id");
    cmd->add_option("--system", *system_message, "optional system message for every sample");
    cmd->callback([=, &global]() {
      global.apply();
      ah::RunConfig config = load_config_or_default(*config_path);
      if (!prompt->empty()) config.prompt_variant_id = *prompt;
      std::string out = !out_path->empty() ? *out_path : config.dataset_out_path;
      if (out.empty()) {
        throw ah::Error(ah::ErrorCode::precondition,
                        "no dataset path: pass --out or set dataset_out_path in the config");
      }
      const std::size_t written = ah::run_build_dataset(
          config, records_path_or_default(*records, config), out,
          system_message->empty() ? std::nullopt
                                  : std::optional<std::string>(*system_message));
      ah::Json summary;
      summary["samples"] = written;
      summary["dataset_path"] = out;
      print_json(summary);
    });
  }

  // ---- emit-train-config --------------------------------------------------
  {
    auto* cmd = app.add_subcommand("emit-train-config", "write hyperparameters for a strategy");
    auto strategy_name = std::make_shared<std::string>();
    auto epochs = std::make_shared<int>(0);
    auto out_path = std::make_shared<std::string>();
    cmd->add_option("--strategy", *strategy_name, "lora or full")->required();
    cmd->add_option("--epochs", *epochs, "epoch override (full fine-tuning: 2 or 3)");
    cmd->add_option("--out", *out_path, "config file to write")->required();
    cmd->callback([=, &global]() {
      global.apply();
      const ah::TrainStrategy strategy = ah::parse_strategy(*strategy_name);
      const ah::TrainConfig config = ah::emit_train_config(
          strategy, *epochs > 0 ? std::optional<int>(*epochs) : std::nullopt);
      ah::write_train_config(config, *out_path);
      std::printf("%s", ah::render_train_config(config).c_str());
    });
  }

  // ---- infer --------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("infer", "query every endpoint about every clip");
    auto config_path = std::make_shared<std::string>();
    auto records = std::make_shared<std::string>();
    auto endpoints_path = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    auto prompt = std::make_shared<std::string>();
    auto max_in_flight = std::make_shared<int>(0);
    auto media_mode = std::make_shared<std::string>();
    auto strict = std::make_shared<bool>(false);
    cmd->add_option("--config", *config_path, "run configuration JSON");
    cmd->add_option("--records", *records, "clip records JSONL from preprocess");
    cmd->add_option("--endpoints", *endpoints_path, "model endpoints JSON array");
    cmd->add_option("--out", *out_path, "predictions JSONL to write")->required();
    cmd->add_option("--prompt", *prompt, "prompt variant id");
    cmd->add_option("--max-in-flight", *max_in_flight, "per-endpoint request cap");
    cmd->add_option("--media-mode", *media_mode, "inline (base64) or url (file references)");
    cmd->add_flag("--strict", *strict, "exit 2 when any clip query fails");
    cmd->callback([=, &global, &exit_code]() {
      global.apply();
      ah::RunConfig config = load_config_or_default(*config_path);
      if (!endpoints_path->empty()) config.endpoints = ah::load_endpoints_file(*endpoints_path);
      if (!prompt->empty()) config.prompt_variant_id = *prompt;
      if (*max_in_flight > 0) config.max_in_flight = *max_in_flight;
      ah::InferenceOptions options;
      if (*media_mode == "url") {
        options.media_mode = ah::MediaMode::url_reference;
      } else if (!media_mode->empty() && *media_mode != "inline") {
        throw ah::Error(ah::ErrorCode::domain, "unknown media mode: " + *media_mode);
      }
      const ah::InferSummary summary =
          ah::run_infer(config, records_path_or_default(*records, config), *out_path, options);
      ah::Json doc;
      doc["clips"] = summary.clips;
      doc["models"] = summary.models;
      doc["predictions"] = summary.predictions;
      doc["failures"] = summary.failures;
      doc["predictions_path"] = *out_path;
      print_json(doc);
      if (summary.failures > 0) {
        ah::log_error("infer.failures", ah::Json{{"count", summary.failures}});
        if (*strict) exit_code = 2;
      }
    });
  }

  // ---- aggregate ----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("aggregate", "clip predictions to per-video labels");
    auto in_path = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    auto abstain = std::make_shared<std::string>("negative");
    cmd->add_option("--in", *in_path, "predictions JSONL from infer")->required();
    cmd->add_option("--out", *out_path, "video predictions JSONL to write")->required();
    cmd->add_option("--abstain", *abstain, "abstain handling: negative or strict");
    cmd->callback([=, &global]() {
      global.apply();
      const std::size_t rows =
          ah::run_aggregate(*in_path, ah::parse_abstain_policy(*abstain), *out_path);
      print_json(ah::Json{{"rows", rows}, {"video_predictions_path", *out_path}});
    });
  }

  // ---- vote ---------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("vote", "fuse per-model video labels by majority");
    auto in_path = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    auto tie = std::make_shared<std::string>("positive");
    cmd->add_option("--in", *in_path, "video predictions JSONL from aggregate")->required();
    cmd->add_option("--out", *out_path, "voted predictions JSONL to write")->required();
    cmd->add_option("--tie", *tie, "tie handling: positive, negative, or error");
    cmd->callback([=, &global]() {
      global.apply();
      const std::size_t videos = ah::run_vote(*in_path, ah::parse_tie_policy(*tie), *out_path);
      print_json(ah::Json{{"videos", videos}, {"voted_path", *out_path}});
    });
  }

  // ---- evaluate -----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("evaluate", "score video predictions against the manifest");
    auto in_path = std::make_shared<std::string>();
    auto manifest = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    cmd->add_option("--in", *in_path, "video predictions JSONL")->required();
    cmd->add_option("--manifest", *manifest, "annotation manifest with ground truth")->required();
    cmd->add_option("--out", *out_path, "report JSON to write");
    cmd->callback([=, &global]() {
      global.apply();
      const ah::Json report = ah::run_evaluate(
          *in_path, *manifest,
          out_path->empty() ? std::nullopt : std::optional<std::string>(*out_path));
      print_json(report);
    });
  }

  // ---- simulate-ensemble --------------------------------------------------
  {
    auto* cmd = app.add_subcommand("simulate-ensemble",
                                   "vote accuracy of independent simulated models");
    auto accuracies = std::make_shared<std::vector<double>>();
    auto n_videos = std::make_shared<int>(100000);
    auto seed = std::make_shared<std::uint64_t>(0);
    auto tie = std::make_shared<std::string>("positive");
    auto out_path = std::make_shared<std::string>();
    cmd->add_option("--accuracy", *accuracies, "per-model accuracy in (0,1], repeatable")
        ->required();
    cmd->add_option("--n-videos", *n_videos, "number of simulated videos");
    cmd->add_option("--seed", *seed, "simulation seed");
    cmd->add_option("--tie", *tie, "tie handling: positive, negative, or error");
    cmd->add_option("--out", *out_path, "report JSON to write");
    cmd->callback([=, &global]() {
      global.apply();
      const ah::Json report = ah::run_simulate_ensemble(
          *accuracies, *n_videos, *seed, ah::parse_tie_policy(*tie),
          out_path->empty() ? std::nullopt : std::optional<std::string>(*out_path));
      print_json(report);
    });
  }

  // ---- gen-fixtures -------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("gen-fixtures", "synthesize an annotated test corpus");
    auto out_dir = std::make_shared<std::string>();
    auto count = std::make_shared<int>(20);
    auto seed = std::make_shared<std::uint64_t>(0);
    auto media = std::make_shared<MediaFlags>();
    cmd->add_option("--out-dir", *out_dir, "directory for fixture videos and manifest")
        ->required();
    cmd->add_option("--count", *count, "number of fixture videos");
    cmd->add_option("--seed", *seed, "generation seed");
    media->attach(cmd);
    cmd->callback([=, &global]() {
      global.apply();
      ah::MediaSettings settings;
      media->apply(settings);
      const ah::GenFixturesResult result =
          ah::run_gen_fixtures(*out_dir, *count, *seed, settings);
      print_json(ah::Json{{"videos", result.videos}, {"manifest_path", result.manifest_path}});
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const ah::Error& e) {
    std::fprintf(stderr, "ahpipe: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ahpipe: %s\n", e.what());
    return 1;
  }
  return exit_code;
}
