#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <chrono>
#include <string>
#include <thread>

#include "httplib.h"

#include "ah/dataset.hpp"
#include "ah/errors.hpp"
#include "ah/inference.hpp"
#include "ah/mock_server.hpp"
#include "test_util.hpp"

using namespace ah;

namespace {

ClipRecord stub_clip(const test::TempDir& dir, const std::string& clip_id,
                     bool with_audio = false) {
  const std::string stem = clip_id.substr(0, clip_id.find(':'));
  ClipRecord rec;
  rec.clip_id = clip_id;
  rec.video_id = stem;
  rec.window = TimeInterval{0, 5000};
  rec.video_path = dir.join(stem + ".avi");
  test::write_text(rec.video_path, "fake video bytes for " + clip_id);
  if (with_audio) {
    rec.audio_path = dir.join(stem + ".wav");
    test::write_text(*rec.audio_path, "fake audio bytes");
  }
  rec.measured_duration_s = 5.0;
  return rec;
}

ModelEndpoint endpoint_for(const MockModelServer& server, const std::string& model_id,
                           int max_retries = 3) {
  ModelEndpoint ep;
  ep.model_id = model_id;
  ep.base_url = server.base_url();
  ep.max_retries = max_retries;
  ep.backoff_base_s = 0.005;  // keep retry sleeps negligible in tests
  return ep;
}

}  // namespace

TEST_CASE("parse_answer extracts the first constrained answer tag") {
  CHECK(parse_answer("<answer>Yes</answer>") == Verdict::positive);
  CHECK(parse_answer("<answer>No</answer>") == Verdict::negative);

  // Tag and payload match case-insensitively, payload whitespace is ignored.
  CHECK(parse_answer("<ANSWER> yes </ANSWER>") == Verdict::positive);
  CHECK(parse_answer("<Answer>NO</Answer>") == Verdict::negative);
  CHECK(parse_answer("<answer>\n Yes \t</answer>") == Verdict::positive);

  // Leading chatter before the tag is fine; the first complete tag wins.
  CHECK(parse_answer("The person hesitates. <answer>Yes</answer>") == Verdict::positive);
  CHECK(parse_answer("<answer>no</answer> but also <answer>yes</answer>") == Verdict::negative);

  // Anything without a complete tag holding yes/no is an abstain, not an error.
  CHECK(parse_answer("") == Verdict::abstain);
  CHECK(parse_answer("Yes") == Verdict::abstain);
  CHECK(parse_answer("<answer>maybe</answer>") == Verdict::abstain);
  CHECK(parse_answer("<answer>Yes") == Verdict::abstain);
  CHECK(parse_answer("Yes</answer>") == Verdict::abstain);
  CHECK(parse_answer("<answer></answer>") == Verdict::abstain);
}

TEST_CASE("verdict names round-trip") {
  for (Verdict v : {Verdict::positive, Verdict::negative, Verdict::abstain}) {
    CHECK(parse_verdict_name(to_string(v)) == v);
  }
  auto err = test::catch_error([] { parse_verdict_name("yes"); });
  REQUIRE(err);
  CHECK(err->code() == ErrorCode::parse);
}

TEST_CASE("endpoint JSON round-trips and validates") {
  Json j = Json::parse(R"({"model_id":"m1","base_url":"http://127.0.0.1:9","auth_token_env":"TOK",
                           "timeout_s":12.5,"max_retries":2,"backoff_base_s":0.25})");
  const ModelEndpoint ep = ModelEndpoint::from_json(j);
  CHECK(ep.model_id == "m1");
  CHECK(ep.base_url == "http://127.0.0.1:9");
  CHECK(ep.auth_token_env == "TOK");
  CHECK(ep.timeout_s == 12.5);
  CHECK(ep.max_retries == 2);
  CHECK(ep.backoff_base_s == 0.25);
  CHECK(ModelEndpoint::from_json(ep.to_json()).to_json() == ep.to_json());

  struct Case {
    const char* text;
    ErrorCode code;
  };
  const Case cases[] = {
      {R"("not an object")", ErrorCode::parse},
      {R"({"base_url":"http://x"})", ErrorCode::parse},
      {R"({"model_id":"m"})", ErrorCode::parse},
      {R"({"model_id":"","base_url":"http://x"})", ErrorCode::parse},
      {R"({"model_id":"m","base_url":"http://x","timeout_s":0})", ErrorCode::domain},
      {R"({"model_id":"m","base_url":"http://x","max_retries":-1})", ErrorCode::domain},
      {R"({"model_id":"m","base_url":"http://x","backoff_base_s":-0.5})", ErrorCode::domain},
  };
  for (const Case& c : cases) {
    CAPTURE(c.text);
    auto err = test::catch_error([&] { ModelEndpoint::from_json(Json::parse(c.text)); });
    REQUIRE(err);
    CHECK(err->code() == c.code);
  }
}

TEST_CASE("chat requests carry media parts first and the prompt last") {
  test::TempDir dir;
  const ClipRecord clip = stub_clip(dir, "vid:0-5000", /*with_audio=*/true);
  const PromptVariant& prompt = find_prompt("v1");

  InferenceOptions options;
  const Json body = build_chat_request(clip, prompt, "model-x", options);

  CHECK(body.at("model") == "model-x");
  CHECK(body.at("temperature") == 0.0);
  CHECK(body.at("max_tokens") == 16);
  CHECK(body.at("user") == "vid:0-5000");

  const Json& messages = body.at("messages");
  REQUIRE(messages.size() == 1);
  CHECK(messages[0].at("role") == "user");
  const Json& parts = messages[0].at("content");
  REQUIRE(parts.size() == 3);
  CHECK(parts[0].at("type") == "video_url");
  CHECK(parts[1].at("type") == "audio_url");
  CHECK(parts[2].at("type") == "text");
  CHECK(parts[2].at("text") == prompt.text);

  // Inline mode embeds the media bytes as data URIs with the right MIME type.
  const std::string video_uri = parts[0].at("video_url").at("url").get<std::string>();
  CHECK(video_uri.rfind("data:video/x-msvideo;base64,", 0) == 0);
  const std::string audio_uri = parts[1].at("audio_url").at("url").get<std::string>();
  CHECK(audio_uri.rfind("data:audio/wav;base64,", 0) == 0);
}

TEST_CASE("chat requests omit the audio part for video-only clips") {
  test::TempDir dir;
  const ClipRecord clip = stub_clip(dir, "vid:0-5000", /*with_audio=*/false);
  const Json body = build_chat_request(clip, find_prompt("v1"), "m", {});
  const Json& parts = body.at("messages")[0].at("content");
  REQUIRE(parts.size() == 2);
  CHECK(parts[0].at("type") == "video_url");
  CHECK(parts[1].at("type") == "text");
}

TEST_CASE("url mode references the absolute file path instead of embedding bytes") {
  test::TempDir dir;
  const ClipRecord clip = stub_clip(dir, "vid:0-5000");
  InferenceOptions options;
  options.media_mode = MediaMode::url_reference;
  const Json body = build_chat_request(clip, find_prompt("v1"), "m", options);
  const std::string uri =
      body.at("messages")[0].at("content")[0].at("video_url").at("url").get<std::string>();
  CHECK(uri == "file://" + clip.video_path);
}

TEST_CASE("a vanished clip file is an I/O error at request build time") {
  test::TempDir dir;
  ClipRecord clip = stub_clip(dir, "vid:0-5000");
  clip.video_path = dir.join("gone.avi");
  auto err = test::catch_error([&] { build_chat_request(clip, find_prompt("v1"), "m", {}); });
  REQUIRE(err);
  CHECK(err->code() == ErrorCode::io);
}

TEST_CASE("predict_clip parses a scripted mock answer") {
  test::TempDir dir;
  const ClipRecord clip = stub_clip(dir, "vid:0-5000");

  MockModelServer server(MockScenario::uniform({"vid:0-5000"}, "<answer>Yes</answer>"));
  server.start();

  const ClipPrediction pred = predict_clip(endpoint_for(server, "m1"), clip, find_prompt("v1"));
  CHECK(pred.clip_id == "vid:0-5000");
  CHECK(pred.video_id == "vid");
  CHECK(pred.model_id == "m1");
  CHECK(pred.verdict == Verdict::positive);
  CHECK(pred.raw_text == "<answer>Yes</answer>");
  CHECK(server.attempts_for("vid:0-5000") == 1);
}

TEST_CASE("predict_clip retries transient server errors and then succeeds") {
  test::TempDir dir;
  const ClipRecord clip = stub_clip(dir, "vid:0-5000");

  MockScenario scenario;
  scenario.clips["vid:0-5000"] = ScenarioEntry{"<answer>No</answer>", /*fail_first=*/2};
  MockModelServer server(scenario);
  server.start();

  const ClipPrediction pred =
      predict_clip(endpoint_for(server, "m1", /*max_retries=*/3), clip, find_prompt("v1"));
  CHECK(pred.verdict == Verdict::negative);
  // Two scripted 500s burned two attempts; the third carried the answer.
  CHECK(server.attempts_for("vid:0-5000") == 3);
}

TEST_CASE("predict_clip gives up on a persistently failing endpoint") {
  test::TempDir dir;
  const ClipRecord clip = stub_clip(dir, "vid:0-5000");

  MockScenario scenario;
  scenario.clips["vid:0-5000"] = ScenarioEntry{"unused", /*fail_first=*/99};
  MockModelServer server(scenario);
  server.start();

  auto err = test::catch_error(
      [&] { predict_clip(endpoint_for(server, "m1", /*max_retries=*/2), clip, find_prompt("v1")); });
  REQUIRE(err);
  CHECK(err->code() == ErrorCode::endpoint);
  CHECK(test::message_contains(*err, "gave up after 3 attempts"));
  CHECK(server.attempts_for("vid:0-5000") == 3);
}

TEST_CASE("predict_clip does not retry non-retryable statuses") {
  test::TempDir dir;
  const ClipRecord clip = stub_clip(dir, "vid:0-5000");

  MockScenario scenario;
  scenario.clips["vid:0-5000"] = ScenarioEntry{"unused", 0, 0, /*status=*/404};
  MockModelServer server(scenario);
  server.start();

  auto err = test::catch_error(
      [&] { predict_clip(endpoint_for(server, "m1", /*max_retries=*/5), clip, find_prompt("v1")); });
  REQUIRE(err);
  CHECK(err->code() == ErrorCode::endpoint);
  CHECK(test::message_contains(*err, "HTTP 404"));
  CHECK(server.attempts_for("vid:0-5000") == 1);
}

TEST_CASE("a clip unknown to the scenario yields a scripted 400") {
  test::TempDir dir;
  const ClipRecord clip = stub_clip(dir, "mystery:0-5000");

  MockModelServer server(MockScenario::uniform({"other:0-5000"}, "<answer>Yes</answer>"));
  server.start();

  auto err = test::catch_error(
      [&] { predict_clip(endpoint_for(server, "m1"), clip, find_prompt("v1")); });
  REQUIRE(err);
  CHECK(err->code() == ErrorCode::endpoint);
  CHECK(test::message_contains(*err, "no scenario for clip"));
}

TEST_CASE("an unreachable endpoint is a transport error") {
  test::TempDir dir;
  const ClipRecord clip = stub_clip(dir, "vid:0-5000");

  ModelEndpoint ep;
  ep.model_id = "dead";
  ep.base_url = "http://127.0.0.1:1";  // reserved port, nothing listens
  ep.max_retries = 0;
  ep.timeout_s = 2.0;
  auto err = test::catch_error([&] { predict_clip(ep, clip, find_prompt("v1")); });
  REQUIRE(err);
  CHECK(err->code() == ErrorCode::transport);
}

TEST_CASE("auth tokens come from the named environment variable") {
  test::TempDir dir;
  const ClipRecord clip = stub_clip(dir, "vid:0-5000");

  // A raw capture server records the headers predict_clip actually sends.
  httplib::Server raw;
  std::string seen_auth;
  std::string seen_clip_header;
  raw.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_clip_header = req.get_header_value("x-clip-id");
    res.set_content(
        R"({"choices":[{"message":{"role":"assistant","content":"<answer>Yes</answer>"}}]})",
        "application/json");
  });
  const int port = raw.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread serve([&] { raw.listen_after_bind(); });
  raw.wait_until_ready();

  ModelEndpoint ep;
  ep.model_id = "m1";
  ep.base_url = "http://127.0.0.1:" + std::to_string(port);
  ep.auth_token_env = "AH_TEST_TOKEN";

  {
    test::EnvGuard unset("AH_TEST_TOKEN", std::nullopt);
    auto err = test::catch_error([&] { predict_clip(ep, clip, find_prompt("v1")); });
    REQUIRE(err);
    CHECK(err->code() == ErrorCode::precondition);
    CHECK(test::message_contains(*err, "AH_TEST_TOKEN"));
  }
  {
    test::EnvGuard set("AH_TEST_TOKEN", std::string("sekrit"));
    const ClipPrediction pred = predict_clip(ep, clip, find_prompt("v1"));
    CHECK(pred.verdict == Verdict::positive);
  }
  CHECK(seen_auth == "Bearer sekrit");
  CHECK(seen_clip_header == "vid:0-5000");

  raw.stop();
  serve.join();
}

TEST_CASE("malformed response bodies are format errors") {
  test::TempDir dir;
  const ClipRecord clip = stub_clip(dir, "vid:0-5000");

  httplib::Server raw;
  std::atomic<int> variant{0};
  raw.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    switch (variant.load()) {
      case 0: res.set_content("not json", "text/plain"); break;
      case 1: res.set_content(R"({"choices":[]})", "application/json"); break;
      default:
        res.set_content(R"({"choices":[{"message":{"role":"assistant"}}]})", "application/json");
    }
  });
  const int port = raw.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread serve([&] { raw.listen_after_bind(); });
  raw.wait_until_ready();

  ModelEndpoint ep;
  ep.model_id = "m1";
  ep.base_url = "http://127.0.0.1:" + std::to_string(port);
  for (int v = 0; v < 3; ++v) {
    variant = v;
    auto err = test::catch_error([&] { predict_clip(ep, clip, find_prompt("v1")); });
    REQUIRE(err);
    CHECK(err->code() == ErrorCode::format);
  }

  raw.stop();
  serve.join();
}

TEST_CASE("run_batch covers every clip/model pair exactly once") {
  test::TempDir dir;
  const std::vector<ClipRecord> clips = {
      stub_clip(dir, "a:0-5000"),
      stub_clip(dir, "b:0-5000"),
      stub_clip(dir, "c:0-5000"),
  };

  // Model one answers everything; model two rejects one clip outright.
  MockModelServer good(MockScenario::uniform({"a:0-5000", "b:0-5000", "c:0-5000"},
                                             "<answer>Yes</answer>"));
  good.start();
  MockScenario flaky_scenario =
      MockScenario::uniform({"a:0-5000", "c:0-5000"}, "<answer>No</answer>");
  flaky_scenario.clips["b:0-5000"] = ScenarioEntry{"unused", 0, 0, /*status=*/404};
  MockModelServer flaky(flaky_scenario);
  flaky.start();

  const std::vector<ModelEndpoint> endpoints = {endpoint_for(good, "good", 0),
                                                endpoint_for(flaky, "flaky", 0)};
  const PredictionSet set = run_batch(clips, endpoints, find_prompt("v1"), 4);

  CHECK(set.prediction_count() == 5);
  REQUIRE(set.failures.size() == 1);
  CHECK(set.failures[0].clip_id == "b:0-5000");
  CHECK(set.failures[0].model_id == "flaky");
  CHECK(set.failures[0].kind == "endpoint");
  CHECK(set.prediction_count() + set.failures.size() == clips.size() * endpoints.size());

  CHECK(set.by_model.at("good").at("a:0-5000").verdict == Verdict::positive);
  CHECK(set.by_model.at("flaky").at("a:0-5000").verdict == Verdict::negative);
  CHECK(set.by_model.at("flaky").count("b:0-5000") == 0);
}

TEST_CASE("run_batch keeps at most max_in_flight requests outstanding per endpoint") {
  test::TempDir dir;
  std::vector<ClipRecord> clips;
  std::vector<std::string> ids;
  for (int i = 0; i < 8; ++i) {
    const std::string id = "clip" + std::to_string(i) + ":0-5000";
    clips.push_back(stub_clip(dir, id));
    ids.push_back(id);
  }

  MockScenario scenario = MockScenario::uniform(ids, "<answer>No</answer>");
  for (auto& [_, entry] : scenario.clips) entry.delay_ms = 60;
  MockModelServer server(scenario);
  server.start();

  const PredictionSet set =
      run_batch(clips, {endpoint_for(server, "m1", 0)}, find_prompt("v1"), 2);
  CHECK(set.prediction_count() == 8);
  CHECK(set.failures.empty());
  CHECK(server.total_requests() == 8);
  // The held-open handler counts concurrent arrivals; the pool must never
  // exceed its configured width.
  CHECK(server.max_concurrent() <= 2);
  CHECK(server.max_concurrent() >= 1);
}

TEST_CASE("run_batch validates its inputs up front") {
  test::TempDir dir;
  const ClipRecord clip = stub_clip(dir, "a:0-5000");
  MockModelServer server(MockScenario::uniform({"a:0-5000"}, "<answer>Yes</answer>"));
  server.start();
  const ModelEndpoint ep = endpoint_for(server, "m1");

  auto no_parallelism =
      test::catch_error([&] { run_batch({clip}, {ep}, find_prompt("v1"), 0); });
  REQUIRE(no_parallelism);
  CHECK(no_parallelism->code() == ErrorCode::precondition);

  auto no_endpoints = test::catch_error([&] { run_batch({clip}, {}, find_prompt("v1"), 1); });
  REQUIRE(no_endpoints);
  CHECK(no_endpoints->code() == ErrorCode::precondition);

  auto dup_clips =
      test::catch_error([&] { run_batch({clip, clip}, {ep}, find_prompt("v1"), 1); });
  REQUIRE(dup_clips);
  CHECK(dup_clips->code() == ErrorCode::precondition);

  auto dup_models =
      test::catch_error([&] { run_batch({clip}, {ep, ep}, find_prompt("v1"), 1); });
  REQUIRE(dup_models);
  CHECK(dup_models->code() == ErrorCode::precondition);

  ModelEndpoint authed = ep;
  authed.auth_token_env = "AH_MISSING_TOKEN";
  test::EnvGuard unset("AH_MISSING_TOKEN", std::nullopt);
  auto missing_auth =
      test::catch_error([&] { run_batch({clip}, {authed}, find_prompt("v1"), 1); });
  REQUIRE(missing_auth);
  CHECK(missing_auth->code() == ErrorCode::precondition);
  // Fail-fast means the server never saw a request for the batch.
  CHECK(server.attempts_for("a:0-5000") == 0);
}

TEST_CASE("prediction sets round-trip through JSONL") {
  test::TempDir dir;
  const std::vector<ClipRecord> clips = {stub_clip(dir, "a:0-5000"), stub_clip(dir, "b:0-5000")};
  MockModelServer server(
      MockScenario::uniform({"a:0-5000", "b:0-5000"}, "<answer>Yes</answer>"));
  server.start();

  PredictionSet set = run_batch(clips, {endpoint_for(server, "m1", 0)}, find_prompt("v1"), 2);
  set.failures.push_back({"c:0-5000", "m1", "transport", "synthetic entry"});

  const std::string path = dir.join("predictions.jsonl");
  write_predictions_jsonl(set, path);
  const PredictionSet loaded = read_predictions_jsonl(path);

  CHECK(loaded.prediction_count() == set.prediction_count());
  REQUIRE(loaded.failures.size() == 1);
  CHECK(loaded.failures[0].clip_id == "c:0-5000");
  CHECK(loaded.failures[0].kind == "transport");
  const ClipPrediction& a = loaded.by_model.at("m1").at("a:0-5000");
  CHECK(a.video_id == "a");
  CHECK(a.verdict == Verdict::positive);
  CHECK(a.raw_text == "<answer>Yes</answer>");
}

TEST_CASE("endpoints files must be nonempty JSON arrays") {
  test::TempDir dir;
  const std::string path = dir.join("endpoints.json");

  test::write_text(path, R"([{"model_id":"m1","base_url":"http://127.0.0.1:9"}])");
  const auto endpoints = load_endpoints_file(path);
  REQUIRE(endpoints.size() == 1);
  CHECK(endpoints[0].model_id == "m1");

  test::write_text(path, R"({"model_id":"m1"})");
  auto not_array = test::catch_error([&] { load_endpoints_file(path); });
  REQUIRE(not_array);
  CHECK(not_array->code() == ErrorCode::parse);

  test::write_text(path, "[]");
  auto empty = test::catch_error([&] { load_endpoints_file(path); });
  REQUIRE(empty);
  CHECK(empty->code() == ErrorCode::parse);
  CHECK(test::message_contains(*empty, "nonempty"));
}
