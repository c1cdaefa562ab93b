#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "panotrack/metrics.hpp"

using namespace panotrack;

namespace {

const double W = 1000.0;

PanoBox box_at(double x, double y = 10.0) {
  return PanoBox(x, y, 40, 40, 1.0, W);
}

// 10 frames x 10 targets in a row; the crafted errors are layered on top.
FrameAnnotations crafted_gt() {
  FrameAnnotations gt;
  for (int f = 1; f <= 10; ++f)
    for (int i = 0; i < 10; ++i) gt.add(f, i + 1, box_at(50.0 + 60.0 * i));
  return gt;
}

}  // namespace

TEST_CASE("perfect tracking scores one") {
  FrameAnnotations gt = crafted_gt();
  MotSummary s = evaluate(gt, gt, 0.5);
  CHECK(s.mota == 1.0);
  CHECK(s.id_switches == 0);
  CHECK(s.false_positives == 0);
  CHECK(s.false_negatives == 0);
  CHECK(s.gt_count == 100);
}

TEST_CASE("empty hypothesis scores zero with all misses") {
  FrameAnnotations gt = crafted_gt();
  MotSummary s = evaluate(gt, FrameAnnotations{}, 0.5);
  CHECK(s.mota == 0.0);
  CHECK(s.false_negatives == s.gt_count);
  CHECK(s.false_positives == 0);
  CHECK(s.id_switches == 0);
}

TEST_CASE("crafted scenario: FN=10, FP=5, IDS=1 over GT=100 gives 0.84") {
  FrameAnnotations gt = crafted_gt();
  FrameAnnotations hyp;
  for (int f = 1; f <= 10; ++f) {
    for (int i = 0; i < 10; ++i) {
      int id = i + 1;
      if (id == 1) continue;                      // 10 misses
      int hyp_id = id;
      if (id == 2 && f >= 6) hyp_id = 22;         // one switch at frame 6
      hyp.add(f, hyp_id, box_at(50.0 + 60.0 * i));
    }
    if (f <= 5) hyp.add(f, 99, box_at(900.0));    // 5 false alarms
  }
  MotSummary s = evaluate(gt, hyp, 0.5);
  CHECK(s.gt_count == 100);
  CHECK(s.false_negatives == 10);
  CHECK(s.false_positives == 5);
  CHECK(s.id_switches == 1);
  CHECK(s.mota == Catch::Approx(0.84).margin(1e-15));
}

TEST_CASE("permuting hypothesis ids changes nothing") {
  FrameAnnotations gt = crafted_gt();
  FrameAnnotations hyp;
  for (int f = 1; f <= 10; ++f) {
    for (int i = 1; i < 10; ++i)
      hyp.add(f, i + 1, box_at(50.0 + 60.0 * i));
    if (f <= 5) hyp.add(f, 99, box_at(900.0));
  }
  MotSummary base = evaluate(gt, hyp, 0.5);

  std::mt19937_64 rng(131);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> ids = {2, 3, 4, 5, 6, 7, 8, 9, 10, 99};
    std::vector<int> shuffled = ids;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::map<int, int> perm;
    for (size_t i = 0; i < ids.size(); ++i) perm[ids[i]] = shuffled[i] + 1000;
    FrameAnnotations renamed;
    for (const auto& [frame, list] : hyp.frames())
      for (const auto& [id, box] : list) renamed.add(frame, perm.at(id), box);
    MotSummary s = evaluate(gt, renamed, 0.5);
    CHECK(s.mota == base.mota);
    CHECK(s.id_switches == base.id_switches);
    CHECK(s.false_positives == base.false_positives);
    CHECK(s.false_negatives == base.false_negatives);
  }
}

TEST_CASE("splitting one id mid-sequence adds exactly one switch") {
  FrameAnnotations gt, hyp;
  for (int f = 1; f <= 20; ++f) {
    gt.add(f, 1, box_at(100.0 + 5.0 * f));
    hyp.add(f, f <= 10 ? 7 : 8, box_at(100.0 + 5.0 * f));
  }
  MotSummary s = evaluate(gt, hyp, 0.5);
  CHECK(s.id_switches == 1);
  CHECK(s.false_positives == 0);
  CHECK(s.false_negatives == 0);
  CHECK(s.mota == Catch::Approx(1.0 - 1.0 / 20.0));
}

TEST_CASE("identity continuation wins over a greedier overlap") {
  // two overlapping hypotheses; the previous correspondence must be kept
  // even when the other hypothesis overlaps slightly more
  FrameAnnotations gt, hyp;
  gt.add(1, 1, box_at(100));
  hyp.add(1, 5, box_at(100));
  gt.add(2, 1, box_at(104));
  hyp.add(2, 5, box_at(100));  // IoU with gt ~ 0.82
  hyp.add(2, 6, box_at(104));  // IoU 1.0 but a different id
  MotSummary s = evaluate(gt, hyp, 0.5);
  CHECK(s.id_switches == 0);
  CHECK(s.false_positives == 1);  // the unused duplicate
}

TEST_CASE("matches below the threshold do not count") {
  FrameAnnotations gt, hyp;
  gt.add(1, 1, box_at(100));
  hyp.add(1, 2, box_at(135));  // IoU ~ 0.07
  MotSummary s = evaluate(gt, hyp, 0.5);
  CHECK(s.matches == 0);
  CHECK(s.false_positives == 1);
  CHECK(s.false_negatives == 1);
  CHECK(s.mota == Catch::Approx(-1.0));
}

TEST_CASE("circular boxes match across the seam") {
  FrameAnnotations gt, hyp;
  gt.add(1, 1, PanoBox(980, 10, 40, 40, 1.0, W));  // wraps
  hyp.add(1, 9, PanoBox(980, 10, 40, 40, 1.0, W));
  MotSummary s = evaluate(gt, hyp, 0.5);
  CHECK(s.mota == 1.0);
}

TEST_CASE("hypothesis frames outside the ground-truth range are rejected") {
  FrameAnnotations gt, hyp;
  gt.add(1, 1, box_at(100));
  hyp.add(2, 1, box_at(100));
  CHECK_THROWS_AS(evaluate(gt, hyp, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(evaluate(FrameAnnotations{}, hyp, 0.5),
                  std::invalid_argument);
}

TEST_CASE("mota upper bound") {
  std::mt19937_64 rng(141);
  std::uniform_int_distribution<int> col(0, 900);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    FrameAnnotations gt, hyp;
    for (int f = 1; f <= 5; ++f)
      for (int i = 0; i < 4; ++i) {
        double x = col(rng);
        gt.add(f, i + 1, box_at(x));
        if (coin(rng)) hyp.add(f, i + 1, box_at(x));
      }
    MotSummary s = evaluate(gt, hyp, 0.5);
    CHECK(s.mota <= 1.0);
    if (s.mota == 1.0) {
      CHECK(s.false_negatives == 0);
      CHECK(s.false_positives == 0);
      CHECK(s.id_switches == 0);
    }
  }
}
