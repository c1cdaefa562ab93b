#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "panotrack/tracker.hpp"

using namespace panotrack;

namespace {

Eigen::VectorXd axis_emb(int axis, int dim = 4) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
  e(axis) = 1.0;
  return e;
}

Detection make_det(double x, double y, int frame, const Eigen::VectorXd& emb,
                   double W = 1000.0) {
  return Detection(PanoBox(x, y, 40, 80, 1.0, W), emb, std::nullopt, frame);
}

}  // namespace

TEST_CASE("cold start creates tentative tracks and emits nothing") {
  OnlineTracker tracker{TrackerConfig{}};
  std::vector<Detection> dets = {make_det(100, 50, 1, axis_emb(0)),
                                 make_det(500, 50, 1, axis_emb(1))};
  auto out = tracker.step(1, dets);
  CHECK(out.empty());
  REQUIRE(tracker.trajectories().size() == 2);
  for (const Trajectory& t : tracker.trajectories())
    CHECK(t.state() == TrackState::Tentative);
}

TEST_CASE("tentative track confirms after the configured hit count") {
  TrackerConfig cfg;
  cfg.confirm_hits = 3;
  OnlineTracker tracker{cfg};
  for (int t = 1; t <= 3; ++t) {
    auto out = tracker.step(
        t, std::vector<Detection>{make_det(100.0 + 2 * t, 50, t, axis_emb(0))});
    if (t < 3)
      CHECK(out.empty());
    else {
      REQUIRE(out.size() == 1);
      CHECK(out[0].id == 1);
      CHECK(out[0].frame == 3);
    }
  }
  REQUIRE(tracker.trajectories().size() == 1);
  CHECK(tracker.trajectories()[0].state() == TrackState::Confirmed);
}

TEST_CASE("tentative track is dropped on its first miss") {
  OnlineTracker tracker{TrackerConfig{}};
  tracker.step(1, std::vector<Detection>{make_det(100, 50, 1, axis_emb(0))});
  tracker.step(2, std::vector<Detection>{});
  CHECK(tracker.trajectories().empty());
}

TEST_CASE("confirmed track is removed after the occlusion window closes") {
  TrackerConfig cfg;
  cfg.confirm_hits = 1;
  cfg.max_misses = 5;
  OnlineTracker tracker{cfg};
  tracker.step(1, std::vector<Detection>{make_det(100, 50, 1, axis_emb(0))});
  REQUIRE(tracker.trajectories().size() == 1);
  for (int t = 2; t <= 6; ++t) {
    tracker.step(t, std::vector<Detection>{});
    CHECK(tracker.trajectories().size() == 1);  // misses <= max_misses
  }
  tracker.step(7, std::vector<Detection>{});  // misses = 6 > 5
  CHECK(tracker.trajectories().empty());
}

TEST_CASE("out-of-order frames are rejected") {
  OnlineTracker tracker{TrackerConfig{}};
  tracker.step(1, std::vector<Detection>{});
  CHECK_THROWS_AS(tracker.step(3, std::vector<Detection>{}), std::logic_error);
  CHECK_THROWS_AS(tracker.step(1, std::vector<Detection>{}), std::logic_error);
  CHECK_NOTHROW(tracker.step(2, std::vector<Detection>{}));
}

TEST_CASE("init tentative") {
  Detection det = make_det(100, 50, 7, axis_emb(0));
  Trajectory traj = init_tentative(det, 42);
  CHECK(traj.id() == 42);
  CHECK(traj.state() == TrackState::Tentative);
  REQUIRE(traj.entries().size() == 1);
  CHECK(traj.entries()[0].frame == 7);
  CHECK_FALSE(traj.entries()[0].location.has_value());

  // zero-velocity init: the next prediction keeps the box center
  auto [next, predicted] = kalman_predict(traj.motion(), 1000.0);
  CHECK(predicted.center_x() == Catch::Approx(det.box.center_x()));
  CHECK(predicted.center_y() == Catch::Approx(det.box.center_y()));
}

TEST_CASE("extend") {
  Detection d1 = make_det(100, 50, 1, axis_emb(0));
  Trajectory traj = init_tentative(d1, 1);
  SECTION("appends and preserves history") {
    Detection d2 = make_det(105, 50, 2, axis_emb(0));
    Trajectory longer = extend(traj, d2);
    REQUIRE(longer.entries().size() == 2);
    CHECK(longer.entries()[0].frame == 1);
    CHECK(longer.entries()[0].box.x == 100.0);
    CHECK(longer.entries()[1].frame == 2);
  }
  SECTION("rejects non-increasing frames") {
    Detection same = make_det(105, 50, 1, axis_emb(0));
    CHECK_THROWS_AS(extend(traj, same), std::invalid_argument);
  }
  SECTION("fifty sequential extensions keep frames strictly increasing") {
    Trajectory t = traj;
    for (int f = 2; f <= 51; ++f)
      t = extend(t, make_det(100.0 + f, 50, f, axis_emb(0)));
    REQUIRE(t.entries().size() == 51);
    for (size_t i = 0; i < t.entries().size(); ++i)
      CHECK(t.entries()[i].frame == static_cast<int>(i + 1));
  }
}

TEST_CASE("ids are never reused and emitted ids are distinct") {
  TrackerConfig cfg;
  cfg.confirm_hits = 1;
  OnlineTracker tracker{cfg};
  std::vector<int> seen_ids;
  for (int t = 1; t <= 10; ++t) {
    std::vector<Detection> dets;
    if (t % 2 == 1) dets.push_back(make_det(100, 50, t, axis_emb(0)));
    // a second target flickers, forcing fresh tracks
    if (t % 3 == 0) dets.push_back(make_det(700, 200, t, axis_emb(1)));
    auto out = tracker.step(t, dets);
    std::set<int> frame_ids;
    for (const TrackOutput& o : out) {
      CHECK(frame_ids.insert(o.id).second);  // distinct within the frame
      seen_ids.push_back(o.id);
    }
  }
  // the tracker's id counter only moves forward
  CHECK(tracker.next_id() > 1);
}

TEST_CASE("two targets swapping positions keep their ids") {
  TrackerConfig cfg;
  cfg.affinity.beta_t = 5.0;
  OnlineTracker tracker{cfg};
  const double W = 1000.0;
  std::map<int, int> id_of_target;  // target -> tracker id, from emissions
  int switches = 0;
  for (int t = 1; t <= 20; ++t) {
    double xa = 100.0 + 10.0 * (t - 1);  // moves right
    double xb = 290.0 - 10.0 * (t - 1);  // moves left, crossing A
    std::vector<Detection> dets = {make_det(xa, 50, t, axis_emb(0), W),
                                   make_det(xb, 50, t, axis_emb(1), W)};
    auto out = tracker.step(t, dets);
    for (const TrackOutput& o : out) {
      int target = o.box.x == xa ? 0 : 1;
      REQUIRE((o.box.x == xa || o.box.x == xb));
      auto it = id_of_target.find(target);
      if (it == id_of_target.end())
        id_of_target[target] = o.id;
      else if (it->second != o.id)
        ++switches;
    }
  }
  CHECK(switches == 0);
  CHECK(id_of_target.size() == 2);
}

TEST_CASE("re-identification after an occlusion inside the window") {
  TrackerConfig cfg;
  cfg.confirm_hits = 1;
  cfg.max_misses = 30;
  OnlineTracker tracker{cfg};
  const int gap = 20;
  int id_before = -1, id_after = -1;
  for (int t = 1; t <= 60; ++t) {
    std::vector<Detection> dets;
    bool occluded = t > 20 && t <= 20 + gap;
    if (!occluded)
      dets.push_back(make_det(100.0 + 3.0 * (t - 1), 50, t, axis_emb(0)));
    auto out = tracker.step(t, dets);
    if (!out.empty()) {
      if (t <= 20) id_before = out[0].id;
      if (t > 20 + gap && id_after == -1) id_after = out[0].id;
    }
  }
  REQUIRE(id_before != -1);
  REQUIRE(id_after != -1);
  CHECK(id_before == id_after);
}

TEST_CASE("a gap past the window produces a fresh id") {
  TrackerConfig cfg;
  cfg.confirm_hits = 1;
  cfg.max_misses = 30;
  OnlineTracker tracker{cfg};
  const int gap = 31;
  int id_before = -1, id_after = -1;
  for (int t = 1; t <= 80; ++t) {
    std::vector<Detection> dets;
    bool occluded = t > 20 && t <= 20 + gap;
    if (!occluded)
      dets.push_back(make_det(100.0 + 3.0 * (t - 1), 50, t, axis_emb(0)));
    auto out = tracker.step(t, dets);
    if (!out.empty()) {
      if (t <= 20) id_before = out[0].id;
      if (t > 20 + gap && id_after == -1) id_after = out[0].id;
    }
  }
  REQUIRE(id_before != -1);
  REQUIRE(id_after != -1);
  CHECK(id_before != id_after);
}

TEST_CASE("identical inputs give bitwise identical outputs") {
  auto run = [] {
    TrackerConfig cfg;
    OnlineTracker tracker{cfg};
    std::vector<TrackOutput> all;
    for (int t = 1; t <= 30; ++t) {
      std::vector<Detection> dets = {
          make_det(wrap_column(950.0 + 7.0 * (t - 1), 1000.0), 50, t,
                   axis_emb(0)),
          make_det(wrap_column(300.0 + 11.0 * (t - 1), 1000.0), 200, t,
                   axis_emb(1))};
      auto out = tracker.step(t, dets);
      all.insert(all.end(), out.begin(), out.end());
    }
    return all;
  };
  auto a = run();
  auto b = run();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].frame == b[i].frame);
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].box.x == b[i].box.x);
    CHECK(a[i].box.y == b[i].box.y);
    CHECK(a[i].box.w == b[i].box.w);
    CHECK(a[i].box.h == b[i].box.h);
  }
}
