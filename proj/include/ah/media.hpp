#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ah/clips.hpp"
#include "ah/time_interval.hpp"

namespace ah {

struct MediaInfo {
  double duration_s = 0.0;
  bool has_audio = false;
  int width = 0;
  int height = 0;
};

/// A clip materialized on disk. The measured duration always sits within
/// ±0.1s of the planned window; `cut` enforces that before returning.
struct ClipArtifact {
  std::string clip_id;
  TimeInterval window;
  std::string video_path;
  std::optional<std::string> audio_path;
  double measured_duration_s = 0.0;
};

struct FixtureSpec {
  double duration_s = 10.0;
  bool with_audio = true;
  bool silent_audio = false;
  int width = 320;
  int height = 240;
  int fps = 25;
};

enum class ToolFlavor {
  auto_detect,  // prefer ffmpeg/ffprobe on PATH, fall back to a bundled avtool
  ffmpeg,
  avtool,
};

/// Where the cutter and prober binaries come from. Explicit paths win over
/// environment overrides (AH_MEDIA_FLAVOR, AH_FFMPEG, AH_FFPROBE, AH_AVTOOL)
/// only when the environment is unset; the environment wins otherwise.
struct ToolchainConfig {
  ToolFlavor flavor = ToolFlavor::auto_detect;
  std::string cut_bin;    // ffmpeg or avtool path; empty = discover
  std::string probe_bin;  // ffprobe path (ffmpeg flavor only); empty = discover
  std::string container_ext = "avi";
};

/// Subprocess front end for the external media toolchain. Every operation
/// spawns one child process; instances are safe to share between threads.
class MediaToolchain {
 public:
  /// Resolves concrete binaries per the config, or fails fast with a tool
  /// error describing everything that was searched.
  static MediaToolchain resolve(const ToolchainConfig& config);

  ToolFlavor flavor() const { return flavor_; }
  const std::string& cut_bin() const { return cut_bin_; }
  const std::string& probe_bin() const { return probe_bin_; }
  const std::string& container_ext() const { return container_ext_; }

  MediaInfo probe(const std::string& path) const;

  /// Cuts [window) out of `source` into `out_path`, re-encoding for
  /// frame-accurate boundaries, and verifies the produced duration against
  /// the window (±0.1s).
  ClipArtifact cut(const std::string& source, const std::string& clip_id,
                   const TimeInterval& window, const std::string& out_path) const;

  /// Writes the source's audio track as mono 16 kHz PCM WAV.
  std::string extract_audio(const std::string& source, const std::string& out_path) const;

  std::string gen_fixture(double duration_s, bool with_audio, const std::string& out_path) const;
  std::string gen_fixture(const FixtureSpec& spec, const std::string& out_path) const;

  // Argv builders are exposed so the command contract can be tested without
  // spawning anything.
  std::vector<std::string> build_probe_argv(const std::string& path) const;
  std::vector<std::string> build_cut_argv(const std::string& source, const TimeInterval& window,
                                          const std::string& out_path) const;
  std::vector<std::string> build_extract_audio_argv(const std::string& source,
                                                    const std::string& out_path) const;
  std::vector<std::string> build_gen_argv(const FixtureSpec& spec,
                                          const std::string& out_path) const;

  MediaInfo probe_cached(const std::string& path) const;

  static constexpr double kDurationToleranceS = 0.1;

 private:
  MediaToolchain(ToolFlavor flavor, std::string cut_bin, std::string probe_bin,
                 std::string container_ext);

  MediaInfo parse_probe_output(const std::string& stdout_text, const std::string& path) const;

  ToolFlavor flavor_;
  std::string cut_bin_;
  std::string probe_bin_;
  std::string container_ext_;

  mutable std::mutex cache_mutex_;
  mutable std::unordered_map<std::string, MediaInfo> probe_cache_;
};

/// Looks `name` up on PATH; empty result when absent.
std::string find_on_path(const std::string& name);

/// Directory holding the currently running executable.
std::string current_executable_dir();

}  // namespace ah
