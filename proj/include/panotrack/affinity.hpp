#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

#include "panotrack/core.hpp"
#include "panotrack/geometry.hpp"
#include "panotrack/kalman.hpp"

// The three trajectory-detection affinity terms and their weighted sum.
// Appearance is an exponentially time-discounted mean of cosine scores,
// motion is circular IoU against the Kalman-predicted box, and location is
// a time/distance RBF product averaged over the trajectory.

namespace panotrack {

struct AffinityConfig {
  double w_app = 1.0;
  double w_mot = 1.0;
  double w_loc = 1.0;
  double beta_t = 5.0;        // time RBF bandwidth, frames
  double beta_l = 1.0;        // location RBF bandwidth, meters
  double gate_theta = 0.3;    // minimum affinity accepted as a match

  void validate() const {
    if (w_app < 0.0 || w_mot < 0.0 || w_loc < 0.0)
      throw std::invalid_argument("AffinityConfig: negative weight");
    if (!(beta_t > 0.0) || !(beta_l > 0.0))
      throw std::invalid_argument("AffinityConfig: bandwidths must be positive");
    if (gate_theta < 0.0)
      throw std::invalid_argument("AffinityConfig: negative gate");
  }
};

// Time-discounted mean of cosine scores between the trajectory's stored
// appearance features and the candidate embedding:
//   sum_k e^(k-t) cos(a_k, emb) / sum_k e^(k-t).
// Weights are rescaled by the newest entry so long gaps cannot underflow the
// denominator; the value is unchanged since the factor cancels.
inline double appearance_similarity(const Trajectory& traj,
                                    const Eigen::VectorXd& embedding,
                                    int t) {
  const auto& entries = traj.entries();
  if (entries.empty())
    throw std::invalid_argument("appearance_similarity: empty trajectory");
  int newest = entries.back().frame;
  if (newest >= t)
    throw std::invalid_argument("appearance_similarity: entries must precede t");
  double num = 0.0, den = 0.0;
  for (const TrajectoryEntry& e : entries) {
    double weight = std::exp(static_cast<double>(e.frame - newest));
    num += weight * e.appearance.dot(embedding);
    den += weight;
  }
  return num / den;
}

// Motion term of the affinity: overlap between the predicted and the
// detected box.
inline double motion_affinity(const PanoBox& predicted, const PanoBox& det) {
  return circular_iou(predicted, det);
}

// Time/location RBF proximity. Entries without a stored location contribute
// zero to the sum but still count in the divisor, so missing evidence
// reduces the score. Returns 0 when the detection has no location.
inline double location_proximity(const Trajectory& traj,
                                 const std::optional<Eigen::Vector3d>& loc,
                                 int t, const AffinityConfig& cfg) {
  const auto& entries = traj.entries();
  if (entries.empty())
    throw std::invalid_argument("location_proximity: empty trajectory");
  if (!loc) return 0.0;
  double sum = 0.0;
  for (const TrajectoryEntry& e : entries) {
    if (!e.location) continue;
    double dt = static_cast<double>(t - e.frame);
    double time_kernel = std::exp(-(dt * dt) / (2.0 * cfg.beta_t * cfg.beta_t));
    double d2 = (*e.location - *loc).squaredNorm();
    double loc_kernel = std::exp(-d2 / (2.0 * cfg.beta_l * cfg.beta_l));
    sum += time_kernel * loc_kernel;
  }
  return sum / static_cast<double>(entries.size());
}

// Assembles the full K x Q matrix. Each trajectory contributes its current
// predicted box (derived from the post-prediction motion state). Negative
// appearance scores are floored at zero so the matrix stays nonnegative.
inline AffinityMatrix affinity_matrix(std::span<const Trajectory> trajs,
                                      std::span<const Detection> dets,
                                      int t, const AffinityConfig& cfg) {
  cfg.validate();
  for (const Detection& d : dets)
    if (d.frame != t)
      throw std::invalid_argument("affinity_matrix: detection not at frame t");

  Eigen::MatrixXd values(static_cast<Eigen::Index>(trajs.size()),
                         static_cast<Eigen::Index>(dets.size()));
  for (size_t u = 0; u < trajs.size(); ++u) {
    const Trajectory& traj = trajs[u];
    double pano_width = traj.last_entry().box.pano_width;
    PanoBox predicted = box_from_state(traj.motion().mean, pano_width);
    for (size_t v = 0; v < dets.size(); ++v) {
      const Detection& det = dets[v];
      double app = std::max(0.0, appearance_similarity(traj, det.embedding, t));
      double mot = motion_affinity(predicted, det.box);
      double loc = location_proximity(traj, det.location, t, cfg);
      values(u, v) = cfg.w_app * app + cfg.w_mot * mot + cfg.w_loc * loc;
    }
  }
  return AffinityMatrix(std::move(values));
}

}  // namespace panotrack
