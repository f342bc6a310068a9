#include "ah/media.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "ah/errors.hpp"
#include "ah/jsonl.hpp"
#include "ah/subprocess.hpp"

namespace ah {

namespace fs = std::filesystem;

namespace {

std::string format_s(double seconds) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(3);
  out << seconds;
  return out.str();
}

std::string env_or_empty(const char* name) {
  const char* value = std::getenv(name);
  return value ? std::string(value) : std::string();
}

bool is_executable(const std::string& path) {
  return !path.empty() && ::access(path.c_str(), X_OK) == 0 && fs::is_regular_file(path);
}

void require_exists(const std::string& path) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::io, "media file not found: " + path);
  }
}

void check_subprocess(const ProcessResult& result, const std::vector<std::string>& argv,
                      ErrorCode code = ErrorCode::tool) {
  if (result.exit_code != 0) {
    throw Error(code, "command failed (exit " + std::to_string(result.exit_code) +
                          "): " + format_command(argv) +
                          (result.err.empty() ? "" : "\n" + result.err));
  }
}

}  // namespace

std::string find_on_path(const std::string& name) {
  if (name.find('/') != std::string::npos) {
    return is_executable(name) ? name : std::string();
  }
  const std::string path_env = env_or_empty("PATH");
  std::size_t pos = 0;
  while (pos <= path_env.size()) {
    const std::size_t colon = path_env.find(':', pos);
    const std::string dir =
        path_env.substr(pos, colon == std::string::npos ? std::string::npos : colon - pos);
    if (!dir.empty()) {
      const std::string candidate = dir + "/" + name;
      if (is_executable(candidate)) {
        return candidate;
      }
    }
    if (colon == std::string::npos) {
      break;
    }
    pos = colon + 1;
  }
  return {};
}

std::string current_executable_dir() {
  std::error_code ec;
  const fs::path exe = fs::read_symlink("/proc/self/exe", ec);
  if (ec) {
    return {};
  }
  return exe.parent_path().string();
}

MediaToolchain::MediaToolchain(ToolFlavor flavor, std::string cut_bin, std::string probe_bin,
                               std::string container_ext)
    : flavor_(flavor),
      cut_bin_(std::move(cut_bin)),
      probe_bin_(std::move(probe_bin)),
      container_ext_(std::move(container_ext)) {}

MediaToolchain MediaToolchain::resolve(const ToolchainConfig& config) {
  ToolFlavor flavor = config.flavor;
  const std::string env_flavor = env_or_empty("AH_MEDIA_FLAVOR");
  if (env_flavor == "ffmpeg") {
    flavor = ToolFlavor::ffmpeg;
  } else if (env_flavor == "avtool") {
    flavor = ToolFlavor::avtool;
  } else if (!env_flavor.empty()) {
    throw Error(ErrorCode::domain, "AH_MEDIA_FLAVOR must be 'ffmpeg' or 'avtool', got '" +
                                       env_flavor + "'");
  }

  std::vector<std::string> searched;
  auto pick = [&searched](const std::string& env_name, const std::string& config_path,
                          const std::string& path_name) -> std::string {
    const std::string from_env = env_or_empty(env_name.c_str());
    if (!from_env.empty()) {
      searched.push_back(env_name + "=" + from_env);
      return is_executable(from_env) ? from_env : std::string();
    }
    if (!config_path.empty()) {
      searched.push_back("config:" + config_path);
      return is_executable(config_path) ? config_path : std::string();
    }
    searched.push_back("PATH:" + path_name);
    return find_on_path(path_name);
  };

  auto find_avtool = [&searched](const std::string& config_path) -> std::string {
    const std::string from_env = env_or_empty("AH_AVTOOL");
    if (!from_env.empty()) {
      searched.push_back("AH_AVTOOL=" + from_env);
      return is_executable(from_env) ? from_env : std::string();
    }
    if (!config_path.empty()) {
      searched.push_back("config:" + config_path);
      return is_executable(config_path) ? config_path : std::string();
    }
    const std::string beside = current_executable_dir() + "/avtool";
    searched.push_back(beside);
    if (is_executable(beside)) {
      return beside;
    }
    searched.push_back("PATH:avtool");
    return find_on_path("avtool");
  };

  if (flavor == ToolFlavor::ffmpeg || flavor == ToolFlavor::auto_detect) {
    const std::string ffmpeg = pick("AH_FFMPEG", config.cut_bin, "ffmpeg");
    const std::string ffprobe = pick("AH_FFPROBE", config.probe_bin, "ffprobe");
    if (!ffmpeg.empty() && !ffprobe.empty()) {
      return MediaToolchain(ToolFlavor::ffmpeg, ffmpeg, ffprobe, config.container_ext);
    }
    if (flavor == ToolFlavor::ffmpeg) {
      throw Error(ErrorCode::tool,
                  "ffmpeg toolchain not found; searched: " + format_command(searched));
    }
  }

  const std::string avtool =
      find_avtool(flavor == ToolFlavor::avtool ? config.cut_bin : std::string());
  if (!avtool.empty()) {
    return MediaToolchain(ToolFlavor::avtool, avtool, avtool, config.container_ext);
  }
  throw Error(ErrorCode::tool,
              "no media toolchain found; searched: " + format_command(searched));
}

std::vector<std::string> MediaToolchain::build_probe_argv(const std::string& path) const {
  if (flavor_ == ToolFlavor::ffmpeg) {
    return {probe_bin_, "-v",           "error",        "-print_format", "json",
            "-show_format", "-show_streams", path};
  }
  return {probe_bin_, "probe", "--in", path};
}

std::vector<std::string> MediaToolchain::build_cut_argv(const std::string& source,
                                                        const TimeInterval& window,
                                                        const std::string& out_path) const {
  if (flavor_ == ToolFlavor::ffmpeg) {
    // Re-encode so cut points do not snap to keyframes.
    return {cut_bin_, "-y",    "-v",      "error",
            "-ss",    format_s(window.start_s()),
            "-i",     source,  "-t",      format_s(window.duration_s()),
            "-c:v",   "mjpeg", "-q:v",    "3",
            "-pix_fmt", "yuvj420p",
            "-c:a",   "pcm_s16le",
            out_path};
  }
  return {cut_bin_, "cut",     "--in",  source,
          "--start", format_s(window.start_s()),
          "--end",   format_s(window.end_s()),
          "--out",   out_path};
}

std::vector<std::string> MediaToolchain::build_extract_audio_argv(
    const std::string& source, const std::string& out_path) const {
  if (flavor_ == ToolFlavor::ffmpeg) {
    return {cut_bin_, "-y", "-v", "error", "-i", source,
            "-vn",    "-ac", "1", "-ar", "16000", "-c:a", "pcm_s16le", out_path};
  }
  return {cut_bin_, "extract-audio", "--in", source, "--out", out_path,
          "--rate", "16000", "--channels", "1"};
}

std::vector<std::string> MediaToolchain::build_gen_argv(const FixtureSpec& spec,
                                                        const std::string& out_path) const {
  const std::string dur = format_s(spec.duration_s);
  if (flavor_ == ToolFlavor::ffmpeg) {
    std::vector<std::string> argv = {
        cut_bin_, "-y", "-v", "error",
        "-f", "lavfi",
        "-i",
        "testsrc2=duration=" + dur + ":size=" + std::to_string(spec.width) + "x" +
            std::to_string(spec.height) + ":rate=" + std::to_string(spec.fps)};
    if (spec.with_audio) {
      const std::string tone = spec.silent_audio
                                   ? "anullsrc=sample_rate=44100:channel_layout=stereo"
                                   : "sine=frequency=440:sample_rate=44100:duration=" + dur;
      argv.insert(argv.end(), {"-f", "lavfi", "-i", tone});
    }
    argv.insert(argv.end(), {"-t", dur, "-c:v", "mjpeg", "-q:v", "3", "-pix_fmt", "yuvj420p"});
    if (spec.with_audio) {
      argv.insert(argv.end(), {"-c:a", "pcm_s16le"});
    }
    argv.push_back(out_path);
    return argv;
  }

  std::vector<std::string> argv = {cut_bin_, "gen",
                                   "--out", out_path,
                                   "--duration", dur,
                                   "--width", std::to_string(spec.width),
                                   "--height", std::to_string(spec.height),
                                   "--fps", std::to_string(spec.fps)};
  if (spec.with_audio) {
    argv.push_back("--audio");
    if (spec.silent_audio) {
      argv.push_back("--silent");
    }
  }
  return argv;
}

MediaInfo MediaToolchain::parse_probe_output(const std::string& stdout_text,
                                             const std::string& path) const {
  Json parsed = Json::parse(stdout_text, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw Error(ErrorCode::format, "prober produced unparseable output for " + path);
  }

  MediaInfo info;
  try {
    if (flavor_ == ToolFlavor::ffmpeg) {
      info.duration_s = std::stod(parsed.at("format").at("duration").get<std::string>());
      for (const Json& stream : parsed.at("streams")) {
        const std::string type = stream.value("codec_type", "");
        if (type == "audio") {
          info.has_audio = true;
        } else if (type == "video" && info.width == 0) {
          info.width = stream.value("width", 0);
          info.height = stream.value("height", 0);
        }
      }
    } else {
      info.duration_s = parsed.at("duration_s").get<double>();
      info.has_audio = parsed.at("has_audio").get<bool>();
      info.width = parsed.value("width", 0);
      info.height = parsed.value("height", 0);
    }
  } catch (const std::exception& e) {
    throw Error(ErrorCode::format,
                "prober output missing expected fields for " + path + ": " + e.what());
  }
  if (!(info.duration_s > 0.0)) {
    throw Error(ErrorCode::format, "probed duration is not positive for " + path);
  }
  return info;
}

MediaInfo MediaToolchain::probe(const std::string& path) const {
  require_exists(path);
  const std::vector<std::string> argv = build_probe_argv(path);
  const ProcessResult result = run_process(argv);
  if (result.exit_code != 0) {
    throw Error(ErrorCode::format, "prober failed for " + path + " (exit " +
                                       std::to_string(result.exit_code) + ")" +
                                       (result.err.empty() ? "" : ": " + result.err));
  }
  return parse_probe_output(result.out, path);
}

MediaInfo MediaToolchain::probe_cached(const std::string& path) const {
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = probe_cache_.find(path);
    if (it != probe_cache_.end()) {
      return it->second;
    }
  }
  MediaInfo info = probe(path);
  std::lock_guard<std::mutex> lock(cache_mutex_);
  probe_cache_.emplace(path, info);
  return info;
}

ClipArtifact MediaToolchain::cut(const std::string& source, const std::string& clip_id,
                                 const TimeInterval& window, const std::string& out_path) const {
  require_exists(source);
  const MediaInfo source_info = probe_cached(source);
  const Millis source_end = to_millis(source_info.duration_s);
  if (window.start_ms < 0 || window.end_ms > source_end) {
    throw Error(ErrorCode::domain,
                "window [" + format_s(window.start_s()) + ", " + format_s(window.end_s()) +
                    ") exceeds media duration " + format_s(source_info.duration_s) + "s of " +
                    source);
  }

  fs::create_directories(fs::path(out_path).parent_path());
  const std::vector<std::string> argv = build_cut_argv(source, window, out_path);
  check_subprocess(run_process(argv), argv);

  const MediaInfo cut_info = probe(out_path);
  const double delta = std::abs(cut_info.duration_s - window.duration_s());
  if (delta > kDurationToleranceS) {
    throw Error(ErrorCode::tool, "cut " + clip_id + " produced duration " +
                                     format_s(cut_info.duration_s) + "s, " + format_s(delta) +
                                     "s away from the planned window");
  }

  ClipArtifact artifact;
  artifact.clip_id = clip_id;
  artifact.window = window;
  artifact.video_path = out_path;
  artifact.measured_duration_s = cut_info.duration_s;
  return artifact;
}

std::string MediaToolchain::extract_audio(const std::string& source,
                                          const std::string& out_path) const {
  require_exists(source);
  const MediaInfo info = probe_cached(source);
  if (!info.has_audio) {
    throw Error(ErrorCode::modality_missing, "no audio track in " + source);
  }
  fs::create_directories(fs::path(out_path).parent_path());
  const std::vector<std::string> argv = build_extract_audio_argv(source, out_path);
  const ProcessResult result = run_process(argv);
  // avtool reports a vanished track as exit 3.
  if (result.exit_code == 3) {
    throw Error(ErrorCode::modality_missing, "no audio track in " + source);
  }
  check_subprocess(result, argv);
  return out_path;
}

std::string MediaToolchain::gen_fixture(double duration_s, bool with_audio,
                                        const std::string& out_path) const {
  FixtureSpec spec;
  spec.duration_s = duration_s;
  spec.with_audio = with_audio;
  return gen_fixture(spec, out_path);
}

std::string MediaToolchain::gen_fixture(const FixtureSpec& spec,
                                        const std::string& out_path) const {
  if (!(spec.duration_s > 0.0) || spec.duration_s > 60.0) {
    throw Error(ErrorCode::precondition, "fixture duration must lie in (0, 60] seconds, got " +
                                             format_s(spec.duration_s));
  }
  fs::create_directories(fs::path(out_path).parent_path());
  const std::vector<std::string> argv = build_gen_argv(spec, out_path);
  check_subprocess(run_process(argv), argv);
  return out_path;
}

}  // namespace ah
