#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include "panotrack/core.hpp"
#include "panotrack/fusion.hpp"
#include "panotrack/metrics.hpp"

// Deterministic scenario generator: constant-velocity targets on the
// circular column axis, one fixed near-orthogonal embedding per target, a
// 3D point cluster per visible target consistent with a pinhole-style
// calibration, plus configurable occlusions, jitter, drops and clutter.
// Everything is a pure function of the spec, so a seed replays exactly.

namespace panotrack {

struct OcclusionEvent {
  int target = 0;       // index into the target list
  int start_frame = 0;  // first occluded frame
  int gap = 0;          // number of consecutive occluded frames
};

// Explicit target placement; used by tests that need a crafted geometry.
struct TargetInit {
  double x0 = 0.0;      // initial left edge, integer-valued
  double y = 0.0;       // fixed top edge
  double speed = 0.0;   // columns per frame, integer-valued
  double w = 50.0;
  double h = 80.0;
  double depth = 10.0;  // meters from the sensor
};

struct ScenarioSpec {
  double pano_width = 3000.0;
  double pano_height = 480.0;
  int n_targets = 10;
  int n_frames = 300;
  int embedding_dim = 16;
  bool seam_crossings = true;
  std::vector<TargetInit> targets;  // when empty, placements are seeded
  std::vector<OcclusionEvent> occlusions;
  double box_jitter_sigma = 0.0;
  double embedding_noise_sigma = 0.0;
  double drop_prob = 0.0;
  double clutter_rate = 0.0;  // expected false detections per frame
  std::uint64_t seed = 1;

  void validate() const {
    if (!(pano_width > 0.0) || !(pano_height > 0.0))
      throw std::invalid_argument("ScenarioSpec: non-positive image size");
    if (n_targets < 1 || n_frames < 1)
      throw std::invalid_argument("ScenarioSpec: need targets and frames");
    if (embedding_dim < n_targets)
      throw std::invalid_argument(
          "ScenarioSpec: embedding_dim must be >= n_targets for "
          "orthogonal appearance");
    for (const OcclusionEvent& e : occlusions)
      if (e.gap < 0) throw std::invalid_argument("ScenarioSpec: negative gap");
    if (!(drop_prob >= 0.0 && drop_prob <= 1.0))
      throw std::invalid_argument("ScenarioSpec: drop_prob outside [0, 1]");
    if (box_jitter_sigma < 0.0 || embedding_noise_sigma < 0.0 ||
        clutter_rate < 0.0)
      throw std::invalid_argument("ScenarioSpec: negative noise parameter");
    if (!targets.empty() && static_cast<int>(targets.size()) != n_targets)
      throw std::invalid_argument("ScenarioSpec: target list size mismatch");
  }
};

struct Scenario {
  std::map<int, std::vector<Detection>> detections;  // keyed by frame
  std::vector<PointCloud> clouds;                    // index = frame - 1
  Calibration calibration;
  FrameAnnotations ground_truth;
  // Per frame: (target id, true 3D position) for every visible target.
  std::map<int, std::vector<std::pair<int, Eigen::Vector3d>>> true_locations;
};

namespace detail {

// Mutually orthonormal embeddings via Gram-Schmidt over seeded Gaussian
// vectors. Requires dim >= count.
inline std::vector<Eigen::VectorXd> orthonormal_embeddings(
    int count, int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  while (static_cast<int>(out.size()) < count) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = gauss(rng);
    for (const Eigen::VectorXd& u : out) v -= u.dot(v) * u;
    double norm = v.norm();
    if (norm < 1e-8) continue;  // rare degenerate draw, resample
    out.push_back(v / norm);
  }
  return out;
}

inline Eigen::VectorXd random_unit(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(dim);
  double norm = 0.0;
  do {
    for (int i = 0; i < dim; ++i) v(i) = gauss(rng);
    norm = v.norm();
  } while (norm < 1e-8);
  return v / norm;
}

}  // namespace detail

// The scene's projection: classic pinhole row with the principal point at
// the image center. Synthetic target positions are chosen by inverting it,
// so projections land where the boxes are; optical realism is not the goal.
inline Calibration synthetic_calibration(double pano_width,
                                         double pano_height) {
  constexpr double kFocal = 600.0;
  Eigen::Matrix<double, 3, 4> M;
  M << kFocal, 0.0, pano_width / 2.0, 0.0,
       0.0, kFocal, pano_height / 2.0, 0.0,
       0.0, 0.0, 1.0, 0.0;
  return Calibration(M, pano_width, pano_height);
}

// 3D position whose projection is the given pixel at the given depth.
inline Eigen::Vector3d backproject(double u, double v, double depth,
                                   const Calibration& calib) {
  double fx = calib.projection(0, 0);
  double fy = calib.projection(1, 1);
  double cx = calib.projection(0, 2);
  double cy = calib.projection(1, 2);
  return {(u - cx) * depth / fx, (v - cy) * depth / fy, depth};
}

inline Scenario generate(const ScenarioSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);

  const double W = spec.pano_width;
  const double H = spec.pano_height;

  std::vector<TargetInit> targets = spec.targets;
  if (targets.empty()) {
    targets.resize(spec.n_targets);
    std::uniform_int_distribution<int> jitter(-40, 40);
    std::uniform_int_distribution<int> speed(2, 5);
    std::uniform_int_distribution<int> width(44, 56);
    std::uniform_int_distribution<int> height(72, 96);
    std::uniform_int_distribution<int> seam_off(50, 250);
    std::bernoulli_distribution flip(0.5);
    double row_span = std::max(1.0, H - 140.0);
    for (int i = 0; i < spec.n_targets; ++i) {
      TargetInit& t = targets[i];
      double frac = spec.n_targets == 1
                        ? 0.0
                        : static_cast<double>(i) / (spec.n_targets - 1);
      t.y = std::floor(20.0 + frac * row_span);
      t.w = width(rng);
      t.h = height(rng);
      t.depth = 8.0 + (i % 10);
      double base = std::floor(i * W / spec.n_targets);
      t.x0 = wrap_column(base + jitter(rng), W);
      t.speed = speed(rng) * (flip(rng) ? 1.0 : -1.0);
      if (spec.seam_crossings && i % 3 == 0) {
        // Start shortly before the seam, moving across it.
        t.x0 = wrap_column(W - seam_off(rng), W);
        t.speed = std::abs(t.speed);
      }
    }
  }

  std::vector<Eigen::VectorXd> embeddings = detail::orthonormal_embeddings(
      spec.n_targets, spec.embedding_dim, rng);

  Scenario out;
  out.calibration = synthetic_calibration(W, H);

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> cluster_spread(0.0, 0.02);
  constexpr int kClusterPoints = 40;

  auto occluded = [&spec](int target, int frame) {
    for (const OcclusionEvent& e : spec.occlusions)
      if (e.target == target && frame >= e.start_frame &&
          frame < e.start_frame + e.gap)
        return true;
    return false;
  };

  for (int frame = 1; frame <= spec.n_frames; ++frame) {
    PointCloud cloud;
    cloud.frame = frame;
    std::vector<Detection> dets;
    auto& locs = out.true_locations[frame];

    for (int i = 0; i < spec.n_targets; ++i) {
      const TargetInit& t = targets[i];
      int id = i + 1;
      double x = wrap_column(t.x0 + t.speed * (frame - 1), W);
      PanoBox box(x, t.y, t.w, t.h, 1.0, W);
      out.ground_truth.add(frame, id, box);

      if (occluded(i, frame)) continue;

      Eigen::Vector3d center =
          backproject(box.center_x(), box.center_y(), t.depth,
                      out.calibration);
      locs.emplace_back(id, center);
      for (int k = 0; k < kClusterPoints; ++k)
        cloud.points.push_back(center + Eigen::Vector3d(cluster_spread(rng),
                                                        cluster_spread(rng),
                                                        cluster_spread(rng)));

      if (spec.drop_prob > 0.0 && unit(rng) < spec.drop_prob) continue;

      PanoBox det_box = box;
      if (spec.box_jitter_sigma > 0.0) {
        double s = spec.box_jitter_sigma;
        det_box = PanoBox(wrap_column(box.x + s * gauss(rng), W),
                          box.y + s * gauss(rng),
                          std::max(8.0, box.w + s * gauss(rng)),
                          std::max(8.0, box.h + s * gauss(rng)), 1.0, W);
      }
      Eigen::VectorXd emb = embeddings[i];
      if (spec.embedding_noise_sigma > 0.0) {
        for (int d = 0; d < emb.size(); ++d)
          emb(d) += spec.embedding_noise_sigma * gauss(rng);
        emb.normalize();
      }
      dets.emplace_back(det_box, emb, std::nullopt, frame);
    }

    if (spec.clutter_rate > 0.0) {
      std::poisson_distribution<int> burst(spec.clutter_rate);
      int n_clutter = burst(rng);
      std::uniform_real_distribution<double> col(0.0, W - 1.0);
      std::uniform_real_distribution<double> row(0.0, std::max(1.0, H - 110.0));
      std::uniform_real_distribution<double> cw(30.0, 80.0);
      std::uniform_real_distribution<double> ch(60.0, 100.0);
      std::uniform_real_distribution<double> cscore(0.4, 0.9);
      for (int k = 0; k < n_clutter; ++k) {
        PanoBox box(std::floor(col(rng)), std::floor(row(rng)),
                    std::floor(cw(rng)), std::floor(ch(rng)), cscore(rng), W);
        dets.emplace_back(box, detail::random_unit(spec.embedding_dim, rng),
                          std::nullopt, frame);
      }
    }

    out.detections[frame] = std::move(dets);
    out.clouds.push_back(std::move(cloud));
  }
  return out;
}

}  // namespace panotrack
