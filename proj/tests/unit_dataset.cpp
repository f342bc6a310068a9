#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>

#include "ah/dataset.hpp"
#include "ah/errors.hpp"
#include "ah/inference.hpp"
#include "ah/jsonl.hpp"
#include "test_util.hpp"

using namespace ah;

namespace {

std::string golden_path(const std::string& name) {
  return std::string(AH_GOLDEN_DIR) + "/" + name;
}

ClipRecord labeled_clip(const std::string& clip_id, const std::string& video_path,
                        std::optional<std::string> audio_path, int label) {
  ClipRecord rec;
  rec.clip_id = clip_id;
  rec.video_id = clip_id.substr(0, clip_id.find(':'));
  rec.window = TimeInterval{0, 5000};
  rec.label = label;
  rec.video_path = video_path;
  rec.audio_path = std::move(audio_path);
  rec.measured_duration_s = 5.0;
  return rec;
}

std::string replace_all(std::string text, const std::string& needle, const std::string& with) {
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), with);
    pos += with.size();
  }
  return text;
}

}  // namespace

TEST_CASE("prompt registry exposes the known variants") {
  REQUIRE(prompt_registry().size() == 2);
  CHECK(find_prompt("v1").variant_id == "v1");
  CHECK(find_prompt("v2").variant_id == "v2");
  // Both wordings pin the constrained answer format the parser relies on.
  for (const PromptVariant& variant : prompt_registry()) {
    CHECK(variant.text.find("<answer>Yes</answer>") != std::string::npos);
    CHECK(variant.text.find("<answer>No</answer>") != std::string::npos);
  }

  auto err = test::catch_error([] { find_prompt("v9"); });
  REQUIRE(err);
  CHECK(err->code() == ErrorCode::domain);
  CHECK(test::message_contains(*err, "v9"));
}

TEST_CASE("build_sample maps labels onto the two target strings") {
  test::TempDir dir;
  test::write_text(dir.join("clip.avi"), "stub");

  const PromptVariant& prompt = find_prompt("v1");
  const auto yes =
      build_sample(labeled_clip("v:0-5000", dir.join("clip.avi"), std::nullopt, 1), prompt);
  CHECK(yes.target == kAnswerYes);
  CHECK(yes.prompt_variant_id == "v1");
  CHECK(yes.prompt_text == prompt.text);
  CHECK_FALSE(yes.audio_ref.has_value());

  const auto no = build_sample(
      labeled_clip("v:0-5000", dir.join("clip.avi"), dir.join("clip.wav"), 0), prompt);
  CHECK(no.target == kAnswerNo);
  REQUIRE(no.audio_ref.has_value());
}

TEST_CASE("build_sample rejects unlabeled clips and missing media") {
  test::TempDir dir;
  test::write_text(dir.join("clip.avi"), "stub");
  const PromptVariant& prompt = find_prompt("v1");

  ClipRecord unlabeled = labeled_clip("v:0-5000", dir.join("clip.avi"), std::nullopt, 1);
  unlabeled.label.reset();
  auto err = test::catch_error([&] { build_sample(unlabeled, prompt); });
  REQUIRE(err);
  CHECK(err->code() == ErrorCode::precondition);

  auto missing = test::catch_error(
      [&] { build_sample(labeled_clip("v:0-5000", dir.join("gone.avi"), std::nullopt, 1), prompt); });
  REQUIRE(missing);
  CHECK(missing->code() == ErrorCode::io);
  CHECK(test::message_contains(*missing, "gone.avi"));
}

TEST_CASE("target strings round-trip through the answer parser") {
  // The emitted assistant turns are exactly what inference later parses, so
  // label -> target -> verdict must be the identity on {0,1}.
  CHECK(parse_answer(kAnswerYes) == Verdict::positive);
  CHECK(parse_answer(kAnswerNo) == Verdict::negative);
}

TEST_CASE("dataset JSONL matches the golden rendering byte for byte") {
  test::TempDir dir;
  test::write_text(dir.join("pos.avi"), "stub");
  test::write_text(dir.join("neg.avi"), "stub");
  const PromptVariant& prompt = find_prompt("v1");

  const std::vector<InstructionSample> samples = {
      build_sample(labeled_clip("pos:0-5000", dir.join("pos.avi"), dir.join("pos.wav"), 1),
                   prompt),
      build_sample(labeled_clip("neg:0-5000", dir.join("neg.avi"), std::nullopt, 0), prompt),
  };

  const std::string out = dir.join("dataset.jsonl");
  CHECK(write_jsonl(samples, out) == 2);

  // The golden file abstracts the temp directory as $DIR; everything else is
  // fixed, including key order.
  const std::string got = replace_all(test::read_text(out), dir.path(), "$DIR");
  CHECK(got == test::read_text(golden_path("dataset_sample.jsonl")));
}

TEST_CASE("an optional system message lands as the leading turn") {
  test::TempDir dir;
  test::write_text(dir.join("pos.avi"), "stub");
  const auto sample = build_sample(
      labeled_clip("pos:0-5000", dir.join("pos.avi"), std::nullopt, 1), find_prompt("v1"));

  DatasetWriteOptions options;
  options.system_message = "You are a careful affect rater.";
  const std::string out = dir.join("dataset.jsonl");
  write_jsonl({sample}, out, options);

  const auto rows = read_jsonl_file(out);
  REQUIRE(rows.size() == 1);
  const Json& messages = rows[0].at("messages");
  REQUIRE(messages.size() == 3);
  CHECK(messages[0].at("role") == "system");
  CHECK(messages[0].at("content") == "You are a careful affect rater.");
  CHECK(messages[1].at("role") == "user");
  CHECK(messages[2].at("role") == "assistant");
  // No audio for this clip: the placeholder stays out of the user turn and
  // the audios key stays out of the row.
  const std::string content = messages[1].at("content").get<std::string>();
  CHECK(content.rfind("<video>", 0) == 0);
  CHECK(content.find("<audio>") == std::string::npos);
  CHECK_FALSE(rows[0].contains("audios"));
}

TEST_CASE("write_jsonl refuses malformed targets") {
  test::TempDir dir;
  InstructionSample sample;
  sample.clip_id = "v:0-5000";
  sample.video_ref = dir.join("v.avi");
  sample.target = "Yes";  // bare text, not the constrained tag form
  auto err = test::catch_error([&] { write_jsonl({sample}, dir.join("d.jsonl")); });
  REQUIRE(err);
  CHECK(err->code() == ErrorCode::domain);
}

TEST_CASE("train config presets match their goldens") {
  CHECK(render_train_config(emit_train_config(TrainStrategy::lora)) ==
        test::read_text(golden_path("train_lora.cfg")));
  CHECK(render_train_config(emit_train_config(TrainStrategy::full)) ==
        test::read_text(golden_path("train_full.cfg")));
}

TEST_CASE("train config field values") {
  const TrainConfig lora = emit_train_config(TrainStrategy::lora);
  CHECK(lora.learning_rate == 1e-5);
  CHECK(lora.epochs == 1);
  REQUIRE(lora.lora_rank.has_value());
  CHECK(*lora.lora_rank == 8);
  REQUIRE(lora.lora_alpha.has_value());
  CHECK(*lora.lora_alpha == 32);
  CHECK(lora.per_device_batch == 2);
  CHECK(lora.grad_accum == 32);
  CHECK(lora.precision_tag == "bfloat16");
  CHECK(lora.flash_attention);
  CHECK(lora.max_length == 32768);

  const TrainConfig full = emit_train_config(TrainStrategy::full);
  CHECK(full.learning_rate == 1e-6);
  CHECK(full.epochs == 2);
  CHECK_FALSE(full.lora_rank.has_value());
  CHECK_FALSE(full.lora_alpha.has_value());

  const TrainConfig full3 = emit_train_config(TrainStrategy::full, 3);
  CHECK(full3.epochs == 3);
}

TEST_CASE("train config epoch overrides are bounded per strategy") {
  auto lora2 = test::catch_error([] { emit_train_config(TrainStrategy::lora, 2); });
  REQUIRE(lora2);
  CHECK(lora2->code() == ErrorCode::domain);

  for (int bad : {1, 4}) {
    auto err = test::catch_error([&] { emit_train_config(TrainStrategy::full, bad); });
    REQUIRE(err);
    CHECK(err->code() == ErrorCode::domain);
  }
}

TEST_CASE("strategy names parse both ways") {
  CHECK(parse_strategy("lora") == TrainStrategy::lora);
  CHECK(parse_strategy("full") == TrainStrategy::full);
  CHECK(std::string(to_string(TrainStrategy::lora)) == "lora");
  CHECK(std::string(to_string(TrainStrategy::full)) == "full");
  auto err = test::catch_error([] { parse_strategy("adapter"); });
  REQUIRE(err);
  CHECK(err->code() == ErrorCode::domain);
}

TEST_CASE("write_train_config writes the rendered form to disk") {
  test::TempDir dir;
  const std::string path = dir.join("train.cfg");
  write_train_config(emit_train_config(TrainStrategy::lora), path);
  CHECK(test::read_text(path) == test::read_text(golden_path("train_lora.cfg")));
}
