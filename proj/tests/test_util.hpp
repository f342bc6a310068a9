#pragma once

// Shared helpers for the test binaries: throwaway directories, environment
// pinning, and reference oracles implemented independently of the library
// code they check.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ah/errors.hpp"
#include "ah/time_interval.hpp"

namespace ah::test {

/// Self-deleting temp directory under the system temp root.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "ahtest.XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) {
      throw std::runtime_error("mkdtemp failed for " + tmpl);
    }
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::string& path() const { return path_; }
  std::string join(const std::string& name) const { return path_ + "/" + name; }

 private:
  std::string path_;
};

/// Pins an environment variable for the lifetime of the guard, restoring the
/// previous value (or absence) on destruction.
class EnvGuard {
 public:
  EnvGuard(std::string name, const std::optional<std::string>& value) : name_(std::move(name)) {
    if (const char* old = std::getenv(name_.c_str())) {
      saved_ = old;
    }
    apply(value);
  }
  ~EnvGuard() { apply(saved_); }
  EnvGuard(const EnvGuard&) = delete;
  EnvGuard& operator=(const EnvGuard&) = delete;

 private:
  void apply(const std::optional<std::string>& value) {
    if (value) {
      ::setenv(name_.c_str(), value->c_str(), 1);
    } else {
      ::unsetenv(name_.c_str());
    }
  }

  std::string name_;
  std::optional<std::string> saved_;
};

/// Runs `fn` and captures the ah::Error it throws; empty when it doesn't.
template <typename Fn>
std::optional<Error> catch_error(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  return std::nullopt;
}

inline bool message_contains(const Error& e, const std::string& needle) {
  return std::string(e.what()).find(needle) != std::string::npos;
}

/// Reference partitioner, written as a direct transcription of the rules so
/// the production implementation has something independent to disagree with:
/// an interval shorter than the clip length stays whole; otherwise a cursor
/// walks forward one full window at a time and the remainder survives only
/// when it reaches the tail threshold.
inline std::vector<TimeInterval> reference_partition(Millis start_ms, Millis end_ms,
                                                     Millis clip_len_ms, Millis min_tail_ms) {
  std::vector<TimeInterval> out;
  const Millis total = end_ms - start_ms;
  if (total < clip_len_ms) {
    out.push_back(TimeInterval{start_ms, end_ms});
    return out;
  }
  Millis cursor = start_ms;
  while (end_ms - cursor >= clip_len_ms) {
    out.push_back(TimeInterval{cursor, cursor + clip_len_ms});
    cursor += clip_len_ms;
  }
  const Millis tail = end_ms - cursor;
  if (tail > 0 && tail >= min_tail_ms) {
    out.push_back(TimeInterval{cursor, end_ms});
  }
  return out;
}

/// Half-open interval overlap, used to reconstruct per-clip ground truth from
/// manifest segments without consulting the code under test.
inline bool windows_overlap(const TimeInterval& a, const TimeInterval& b) {
  return a.start_ms < b.end_ms && b.start_ms < a.end_ms;
}

/// The uniform draw contract shared by every seeded component: 53-bit
/// mantissa taken from the top of a mt19937_64 word. Redeclared here so a
/// drive-by change to the production draw breaks a test instead of silently
/// changing every published seed.
inline double reference_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open " + path + " for writing");
  }
  out << content;
}

}  // namespace ah::test
