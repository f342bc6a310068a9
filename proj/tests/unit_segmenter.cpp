#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>

#include "ah/errors.hpp"
#include "ah/segmenter.hpp"
#include "test_util.hpp"

using namespace ah;

namespace {

SegmentationPolicy policy_of(Millis clip_len_ms, Millis min_tail_ms) {
  SegmentationPolicy p;
  p.clip_len_ms = clip_len_ms;
  p.min_tail_ms = min_tail_ms;
  return p;
}

void check_same_windows(const std::vector<TimeInterval>& got,
                        const std::vector<TimeInterval>& expected) {
  REQUIRE(got.size() == expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].start_ms == expected[i].start_ms);
    CHECK(got[i].end_ms == expected[i].end_ms);
  }
}

}  // namespace

TEST_CASE("policy validation rejects degenerate parameters") {
  CHECK_FALSE(test::catch_error([] { SegmentationPolicy::training_defaults().check(); }));

  auto zero_len = test::catch_error([] { policy_of(0, 0).check(); });
  REQUIRE(zero_len);
  CHECK(zero_len->code() == ErrorCode::domain);

  auto negative_tail = test::catch_error([] { policy_of(5000, -1).check(); });
  REQUIRE(negative_tail);
  CHECK(negative_tail->code() == ErrorCode::domain);

  auto tail_above_len = test::catch_error([] { policy_of(5000, 5001).check(); });
  REQUIRE(tail_above_len);
  CHECK(tail_above_len->code() == ErrorCode::domain);
}

TEST_CASE("partition handles the canonical durations exactly") {
  const SegmentationPolicy p = SegmentationPolicy::training_defaults();  // 5s / 1s tail

  // Shorter than one clip: kept whole, even below the tail threshold.
  check_same_windows(partition(TimeInterval{0, 4290}, p), {TimeInterval{0, 4290}});
  check_same_windows(partition(TimeInterval{0, 800}, p), {TimeInterval{0, 800}});

  // Exact multiple: full windows only, no empty tail.
  check_same_windows(partition(TimeInterval{0, 10000}, p),
                     {TimeInterval{0, 5000}, TimeInterval{5000, 10000}});

  // Remainder above the threshold survives as a short final clip.
  check_same_windows(
      partition(TimeInterval{0, 12000}, p),
      {TimeInterval{0, 5000}, TimeInterval{5000, 10000}, TimeInterval{10000, 12000}});

  // Remainder below the threshold is discarded.
  check_same_windows(partition(TimeInterval{0, 10500}, p),
                     {TimeInterval{0, 5000}, TimeInterval{5000, 10000}});

  // Remainder exactly at the threshold is kept (boundary is inclusive).
  check_same_windows(
      partition(TimeInterval{0, 11000}, p),
      {TimeInterval{0, 5000}, TimeInterval{5000, 10000}, TimeInterval{10000, 11000}});

  // One millisecond under the threshold is dropped.
  check_same_windows(partition(TimeInterval{0, 10999}, p),
                     {TimeInterval{0, 5000}, TimeInterval{5000, 10000}});
}

TEST_CASE("partition respects a non-zero interval origin") {
  const SegmentationPolicy p = SegmentationPolicy::training_defaults();
  check_same_windows(
      partition(TimeInterval{1250, 13250}, p),
      {TimeInterval{1250, 6250}, TimeInterval{6250, 11250}, TimeInterval{11250, 13250}});
}

TEST_CASE("partition matches the reference enumerator across random parameters") {
  // The oracle in test_util.hpp walks a cursor instead of computing a window
  // count, so an off-by-one in either implementation shows up as a mismatch.
  std::mt19937_64 rng(0x5eed);
  for (int trial = 0; trial < 1000; ++trial) {
    const Millis start = static_cast<Millis>(rng() % 20000);
    const Millis total = 1 + static_cast<Millis>(rng() % 60000);
    const Millis clip_len = 500 + static_cast<Millis>(rng() % 9501);
    const Millis min_tail = static_cast<Millis>(rng() % (clip_len + 1));

    CAPTURE(start);
    CAPTURE(total);
    CAPTURE(clip_len);
    CAPTURE(min_tail);

    const auto got = partition(TimeInterval{start, start + total}, policy_of(clip_len, min_tail));
    const auto expected = test::reference_partition(start, start + total, clip_len, min_tail);
    check_same_windows(got, expected);

    // Structural invariants hold independently of the oracle: windows are
    // consecutive, begin at the interval start, never exceed the clip length,
    // and only the final one may be shorter.
    REQUIRE_FALSE(got.empty());
    CHECK(got.front().start_ms == start);
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].duration_ms() <= std::max(clip_len, total));
      if (i > 0) {
        CHECK(got[i].start_ms == got[i - 1].end_ms);
        CHECK(got[i - 1].duration_ms() == clip_len);
      }
    }
    CHECK(got.back().end_ms <= start + total);
  }
}

TEST_CASE("plan_training_clips labels positives per segment and negatives whole") {
  const SegmentationPolicy p = SegmentationPolicy::training_defaults();

  VideoAnnotation pos;
  pos.video_id = "pos";
  pos.global_label = 1;
  pos.duration_ms = 30000;
  pos.segments = {TimeInterval{1000, 7000}, TimeInterval{20000, 24290}};

  const auto pos_clips = plan_training_clips(pos, p);
  REQUIRE(pos_clips.size() == 3);
  CHECK(pos_clips[0].clip_id == "pos:1000-6000");
  CHECK(pos_clips[1].clip_id == "pos:6000-7000");
  CHECK(pos_clips[2].clip_id == "pos:20000-24290");
  for (const ClipSpec& clip : pos_clips) {
    CHECK(clip.video_id == "pos");
    REQUIRE(clip.label.has_value());
    CHECK(*clip.label == 1);
  }

  VideoAnnotation neg;
  neg.video_id = "neg";
  neg.global_label = 0;
  neg.duration_ms = 12000;

  const auto neg_clips = plan_training_clips(neg, p);
  REQUIRE(neg_clips.size() == 3);
  CHECK(neg_clips[0].clip_id == "neg:0-5000");
  CHECK(neg_clips[2].clip_id == "neg:10000-12000");
  for (const ClipSpec& clip : neg_clips) {
    REQUIRE(clip.label.has_value());
    CHECK(*clip.label == 0);
  }
}

TEST_CASE("plan_training_clips can keep a negative video as one sample") {
  SegmentationPolicy p = SegmentationPolicy::training_defaults();
  p.negative_single_sample = true;

  VideoAnnotation neg;
  neg.video_id = "neg";
  neg.global_label = 0;
  neg.duration_ms = 12000;

  const auto clips = plan_training_clips(neg, p);
  REQUIRE(clips.size() == 1);
  CHECK(clips[0].clip_id == "neg:0-12000");
  CHECK(clips[0].window.duration_ms() == 12000);
  CHECK(clips[0].label == 0);
}

TEST_CASE("plan_training_clips insists on a validated duration") {
  VideoAnnotation ann;
  ann.video_id = "v";
  ann.global_label = 0;
  auto err = test::catch_error(
      [&] { plan_training_clips(ann, SegmentationPolicy::training_defaults()); });
  REQUIRE(err);
  CHECK(err->code() == ErrorCode::precondition);
  CHECK(test::message_contains(*err, "validate()"));
}

TEST_CASE("plan_inference_clips covers the whole video unlabeled") {
  const auto clips =
      plan_inference_clips("test_vid", 12.0, SegmentationPolicy::inference_defaults());
  REQUIRE(clips.size() == 3);
  CHECK(clips[0].clip_id == "test_vid:0-5000");
  CHECK(clips[1].clip_id == "test_vid:5000-10000");
  CHECK(clips[2].clip_id == "test_vid:10000-12000");
  for (const ClipSpec& clip : clips) {
    CHECK_FALSE(clip.label.has_value());
  }

  // A short video still yields exactly one clip, so no test video is lost.
  const auto short_clips =
      plan_inference_clips("tiny", 0.8, SegmentationPolicy::inference_defaults());
  REQUIRE(short_clips.size() == 1);
  CHECK(short_clips[0].window.duration_ms() == 800);
}

TEST_CASE("plan_inference_clips rejects non-positive durations") {
  for (double bad : {0.0, -2.0, 0.0004}) {
    auto err = test::catch_error(
        [&] { plan_inference_clips("v", bad, SegmentationPolicy::inference_defaults()); });
    REQUIRE(err);
    CHECK(err->code() == ErrorCode::domain);
  }
}

TEST_CASE("clip ids encode the source window in milliseconds") {
  CHECK(make_clip_id("abc", TimeInterval{0, 4290}) == "abc:0-4290");
  CHECK(make_clip_id("abc", TimeInterval{5000, 10000}) == "abc:5000-10000");
  const ClipSpec spec = ClipSpec::make("abc", TimeInterval{250, 5250}, 1);
  CHECK(spec.clip_id == "abc:250-5250");
  CHECK(spec.video_id == "abc");
  CHECK(spec.label == 1);
}
