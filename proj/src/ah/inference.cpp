#include "ah/inference.hpp"

#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "httplib.h"

#include "ah/base64.hpp"
#include "ah/errors.hpp"

namespace ah {

ModelEndpoint ModelEndpoint::from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::parse, "endpoint entry is not an object");
  ModelEndpoint ep;
  if (!j.contains("model_id") || !j["model_id"].is_string() ||
      j["model_id"].get<std::string>().empty()) {
    throw Error(ErrorCode::parse, "endpoint missing model_id");
  }
  if (!j.contains("base_url") || !j["base_url"].is_string() ||
      j["base_url"].get<std::string>().empty()) {
    throw Error(ErrorCode::parse, "endpoint missing base_url");
  }
  ep.model_id = j["model_id"].get<std::string>();
  ep.base_url = j["base_url"].get<std::string>();
  if (j.contains("auth_token_env") && !j["auth_token_env"].is_null()) {
    ep.auth_token_env = j["auth_token_env"].get<std::string>();
  }
  if (j.contains("timeout_s")) ep.timeout_s = j["timeout_s"].get<double>();
  if (j.contains("max_retries")) ep.max_retries = j["max_retries"].get<int>();
  if (j.contains("backoff_base_s")) ep.backoff_base_s = j["backoff_base_s"].get<double>();
  if (ep.timeout_s <= 0) throw Error(ErrorCode::domain, "endpoint timeout_s must be > 0");
  if (ep.max_retries < 0) throw Error(ErrorCode::domain, "endpoint max_retries must be >= 0");
  if (ep.backoff_base_s < 0) throw Error(ErrorCode::domain, "endpoint backoff_base_s must be >= 0");
  return ep;
}

Json ModelEndpoint::to_json() const {
  Json j;
  j["model_id"] = model_id;
  j["base_url"] = base_url;
  if (!auth_token_env.empty()) j["auth_token_env"] = auth_token_env;
  j["timeout_s"] = timeout_s;
  j["max_retries"] = max_retries;
  j["backoff_base_s"] = backoff_base_s;
  return j;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::positive: return "positive";
    case Verdict::negative: return "negative";
    case Verdict::abstain: return "abstain";
  }
  return "?";
}

Verdict parse_verdict_name(const std::string& name) {
  if (name == "positive") return Verdict::positive;
  if (name == "negative") return Verdict::negative;
  if (name == "abstain") return Verdict::abstain;
  throw Error(ErrorCode::parse, "unknown verdict: " + name);
}

namespace {

std::string ascii_lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

Verdict parse_answer(const std::string& text) {
  const std::string haystack = ascii_lower(text);
  const std::string open = "<answer>";
  const std::string close = "</answer>";
  const std::size_t start = haystack.find(open);
  if (start == std::string::npos) return Verdict::abstain;
  const std::size_t payload_begin = start + open.size();
  const std::size_t end = haystack.find(close, payload_begin);
  if (end == std::string::npos) return Verdict::abstain;
  const std::string payload = trim(haystack.substr(payload_begin, end - payload_begin));
  if (payload == "yes") return Verdict::positive;
  if (payload == "no") return Verdict::negative;
  return Verdict::abstain;
}

namespace {

std::string guess_mime(const std::string& path) {
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : ascii_lower(path.substr(dot));
  if (ext == ".avi") return "video/x-msvideo";
  if (ext == ".mp4") return "video/mp4";
  if (ext == ".mkv") return "video/x-matroska";
  if (ext == ".wav") return "audio/wav";
  return "application/octet-stream";
}

std::string media_uri(const std::string& path, MediaMode mode) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::io, "clip media file missing: " + path);
  }
  if (mode == MediaMode::url_reference) {
    return "file://" + std::filesystem::absolute(path).string();
  }
  return "data:" + guess_mime(path) + ";base64," + base64_encode(read_file(path));
}

}  // namespace

Json build_chat_request(const ClipRecord& clip, const PromptVariant& prompt,
                        const std::string& model_id, const InferenceOptions& options) {
  Json parts = Json::array();
  parts.push_back(Json{{"type", "video_url"},
                       {"video_url", Json{{"url", media_uri(clip.video_path, options.media_mode)}}}});
  if (clip.audio_path) {
    parts.push_back(Json{{"type", "audio_url"},
                         {"audio_url", Json{{"url", media_uri(*clip.audio_path, options.media_mode)}}}});
  }
  parts.push_back(Json{{"type", "text"}, {"text", prompt.text}});

  Json body;
  body["model"] = model_id;
  body["messages"] = Json::array({Json{{"role", "user"}, {"content", parts}}});
  body["temperature"] = options.temperature;
  body["max_tokens"] = options.max_tokens;
  body["user"] = clip.clip_id;
  return body;
}

namespace {

bool retryable_status(int status) {
  return status == 408 || status == 429 || (status >= 500 && status < 600);
}

double jitter_backoff_s(double base_s, int attempt) {
  thread_local std::mt19937_64 rng(
      std::random_device{}() ^
      static_cast<std::uint64_t>(std::hash<std::thread::id>{}(std::this_thread::get_id())));
  const double cap = base_s * static_cast<double>(1 << attempt);
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return cap * u;
}

std::string snippet(const std::string& body) {
  constexpr std::size_t kMax = 160;
  if (body.size() <= kMax) return body;
  return body.substr(0, kMax) + "...";
}

std::string extract_content(const std::string& body) {
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::format, std::string("response is not JSON: ") + e.what());
  }
  if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    throw Error(ErrorCode::format, "response has no choices");
  }
  const Json& first = j["choices"][0];
  if (!first.contains("message") || !first["message"].contains("content") ||
      !first["message"]["content"].is_string()) {
    throw Error(ErrorCode::format, "response choice has no message content");
  }
  return first["message"]["content"].get<std::string>();
}

std::string bearer_token(const ModelEndpoint& endpoint) {
  if (endpoint.auth_token_env.empty()) return {};
  const char* value = std::getenv(endpoint.auth_token_env.c_str());
  if (value == nullptr || *value == '\0') {
    throw Error(ErrorCode::precondition,
                "auth env var not set: " + endpoint.auth_token_env);
  }
  return value;
}

}  // namespace

ClipPrediction predict_clip(const ModelEndpoint& endpoint, const ClipRecord& clip,
                            const PromptVariant& prompt, const InferenceOptions& options) {
  const std::string token = bearer_token(endpoint);
  const std::string payload = build_chat_request(clip, prompt, endpoint.model_id, options).dump();

  httplib::Client client(endpoint.base_url);
  const auto timeout = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::duration<double>(endpoint.timeout_s));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers{{"x-clip-id", clip.clip_id}};
  if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

  const int attempts = endpoint.max_retries + 1;
  std::string last_failure;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(
          jitter_backoff_s(endpoint.backoff_base_s, attempt - 1)));
    }
    const auto t0 = std::chrono::steady_clock::now();
    httplib::Result res = client.Post("/v1/chat/completions", headers, payload, "application/json");
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - t0);

    if (!res) {
      last_failure = "transport: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      std::ostringstream msg;
      msg << "HTTP " << res->status << ": " << snippet(res->body);
      if (retryable_status(res->status)) {
        last_failure = msg.str();
        continue;
      }
      throw Error(ErrorCode::endpoint, msg.str());
    }

    ClipPrediction pred;
    pred.clip_id = clip.clip_id;
    pred.video_id = clip.video_id;
    pred.model_id = endpoint.model_id;
    pred.raw_text = extract_content(res->body);
    pred.verdict = parse_answer(pred.raw_text);
    pred.latency_ms = elapsed.count();
    return pred;
  }

  std::ostringstream msg;
  msg << "gave up after " << attempts << " attempts; last: " << last_failure;
  const bool was_transport = last_failure.rfind("transport:", 0) == 0;
  throw Error(was_transport ? ErrorCode::transport : ErrorCode::endpoint, msg.str());
}

std::size_t PredictionSet::prediction_count() const {
  std::size_t n = 0;
  for (const auto& [_, preds] : by_model) n += preds.size();
  return n;
}

namespace {

std::string failure_kind(const Error& e) {
  switch (e.code()) {
    case ErrorCode::transport: return "transport";
    case ErrorCode::endpoint: return "endpoint";
    case ErrorCode::format: return "format";
    default: return to_string(e.code());
  }
}

}  // namespace

PredictionSet run_batch(const std::vector<ClipRecord>& clips,
                        const std::vector<ModelEndpoint>& endpoints,
                        const PromptVariant& prompt, int max_in_flight,
                        const InferenceOptions& options) {
  if (max_in_flight < 1) throw Error(ErrorCode::precondition, "max_in_flight must be >= 1");
  if (endpoints.empty()) throw Error(ErrorCode::precondition, "no endpoints configured");
  {
    std::map<std::string, int> clip_seen;
    for (const auto& clip : clips) {
      if (++clip_seen[clip.clip_id] > 1) {
        throw Error(ErrorCode::precondition, "duplicate clip id in batch: " + clip.clip_id);
      }
    }
    std::map<std::string, int> model_seen;
    for (const auto& ep : endpoints) {
      if (++model_seen[ep.model_id] > 1) {
        throw Error(ErrorCode::precondition, "duplicate model id: " + ep.model_id);
      }
      bearer_token(ep);  // fail fast on missing auth env
    }
  }

  PredictionSet set;
  for (const auto& ep : endpoints) set.by_model[ep.model_id];  // stable model order
  if (clips.empty()) return set;

  std::mutex collect_mutex;
  std::vector<std::thread> workers;
  for (const auto& endpoint : endpoints) {
    auto next = std::make_shared<std::atomic<std::size_t>>(0);
    const int pool = std::min<int>(max_in_flight, static_cast<int>(clips.size()));
    for (int w = 0; w < pool; ++w) {
      workers.emplace_back([&, next]() {
        for (;;) {
          const std::size_t i = next->fetch_add(1);
          if (i >= clips.size()) return;
          const ClipRecord& clip = clips[i];
          try {
            ClipPrediction pred = predict_clip(endpoint, clip, prompt, options);
            std::lock_guard<std::mutex> lock(collect_mutex);
            set.by_model[endpoint.model_id].emplace(clip.clip_id, std::move(pred));
          } catch (const Error& e) {
            std::lock_guard<std::mutex> lock(collect_mutex);
            set.failures.push_back({clip.clip_id, endpoint.model_id, failure_kind(e), e.what()});
          }
        }
      });
    }
  }
  for (auto& t : workers) t.join();
  return set;
}

Json prediction_to_json(const ClipPrediction& pred) {
  Json j;
  j["type"] = "prediction";
  j["clip_id"] = pred.clip_id;
  j["video_id"] = pred.video_id;
  j["model_id"] = pred.model_id;
  j["verdict"] = to_string(pred.verdict);
  j["raw_text"] = pred.raw_text;
  j["latency_ms"] = pred.latency_ms;
  return j;
}

ClipPrediction prediction_from_json(const Json& j) {
  ClipPrediction pred;
  pred.clip_id = j.at("clip_id").get<std::string>();
  pred.video_id = j.at("video_id").get<std::string>();
  pred.model_id = j.at("model_id").get<std::string>();
  pred.verdict = parse_verdict_name(j.at("verdict").get<std::string>());
  pred.raw_text = j.at("raw_text").get<std::string>();
  pred.latency_ms = j.at("latency_ms").get<std::int64_t>();
  return pred;
}

Json failure_to_json(const FailureRecord& failure) {
  Json j;
  j["type"] = "failure";
  j["clip_id"] = failure.clip_id;
  j["model_id"] = failure.model_id;
  j["kind"] = failure.kind;
  j["detail"] = failure.detail;
  return j;
}

void write_predictions_jsonl(const PredictionSet& set, const std::string& path) {
  std::vector<Json> rows;
  rows.reserve(set.prediction_count() + set.failures.size());
  for (const auto& [_, preds] : set.by_model) {
    for (const auto& [_, pred] : preds) rows.push_back(prediction_to_json(pred));
  }
  for (const auto& failure : set.failures) rows.push_back(failure_to_json(failure));
  write_jsonl_file(path, rows);
}

PredictionSet read_predictions_jsonl(const std::string& path) {
  PredictionSet set;
  for_each_jsonl(read_file(path), [&](std::size_t line_no, const Json& j) {
    const std::string type = j.value("type", "prediction");
    if (type == "prediction") {
      ClipPrediction pred;
      try {
        pred = prediction_from_json(j);
      } catch (const Json::exception& e) {
        std::ostringstream msg;
        msg << "line " << line_no << ": bad prediction row: " << e.what();
        throw Error(ErrorCode::parse, msg.str());
      }
      set.by_model[pred.model_id][pred.clip_id] = std::move(pred);
    } else if (type == "failure") {
      set.failures.push_back({j.at("clip_id").get<std::string>(),
                              j.at("model_id").get<std::string>(),
                              j.at("kind").get<std::string>(),
                              j.at("detail").get<std::string>()});
    } else {
      std::ostringstream msg;
      msg << "line " << line_no << ": unknown row type: " << type;
      throw Error(ErrorCode::parse, msg.str());
    }
  });
  return set;
}

std::vector<ModelEndpoint> load_endpoints_file(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::parse, path + ": " + e.what());
  }
  if (!j.is_array() || j.empty()) {
    throw Error(ErrorCode::parse, path + ": expected a nonempty JSON array of endpoints");
  }
  std::vector<ModelEndpoint> endpoints;
  endpoints.reserve(j.size());
  for (const Json& entry : j) endpoints.push_back(ModelEndpoint::from_json(entry));
  return endpoints;
}

}  // namespace ah
