#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "panotrack/affinity.hpp"
#include "panotrack/assignment.hpp"
#include "panotrack/core.hpp"
#include "panotrack/kalman.hpp"

// The online per-frame loop: predict every active trajectory, associate with
// the frame's detections, then run the lifecycle rules. Online contract:
// frames are processed strictly in order and emitted results are never
// revised.

namespace panotrack {

struct TrackerConfig {
  int confirm_hits = 3;   // consecutive matches that confirm a tentative track
  int max_misses = 30;    // occlusion window, frames
  AffinityConfig affinity;
  MatchObjective objective = MatchObjective::SquaredSum;

  void validate() const {
    if (confirm_hits < 1)
      throw std::invalid_argument("TrackerConfig: confirm_hits must be >= 1");
    if (max_misses < 0)
      throw std::invalid_argument("TrackerConfig: max_misses must be >= 0");
    affinity.validate();
  }
};

// Fresh single-entry trajectory from an unmatched detection: motion state at
// the box with zero velocity and inflated covariance.
inline Trajectory init_tentative(const Detection& det, int id) {
  TrajectoryEntry entry{det.frame, det.embedding, det.box, det.location};
  return Trajectory(id, std::move(entry), init_box_state(det.box));
}

namespace detail {

// The initial detection counts as the first hit, so a confirm threshold of
// one promotes immediately.
inline void maybe_confirm(Trajectory& traj, int confirm_hits) {
  if (traj.state() == TrackState::Tentative && traj.hits >= confirm_hits)
    traj.confirm();
}

}  // namespace detail

// Extends a trajectory with a matched detection, appending the
// (appearance, box, location) tuple. History is never modified.
inline Trajectory extend(const Trajectory& traj, const Detection& det) {
  Trajectory out = traj;
  out.append(TrajectoryEntry{det.frame, det.embedding, det.box, det.location});
  return out;
}

// One emitted box: a confirmed trajectory's current-frame position.
struct TrackOutput {
  int frame = 0;
  int id = 0;
  PanoBox box;
};

class OnlineTracker {
 public:
  explicit OnlineTracker(TrackerConfig config) : config_(std::move(config)) {
    config_.validate();
  }

  // Processes the detections of frame t and returns the confirmed tracks
  // emitted for this frame. Frames must arrive consecutively.
  std::vector<TrackOutput> step(int t, std::span<const Detection> dets) {
    if (cursor_ && t != *cursor_ + 1)
      throw std::logic_error("OnlineTracker: out-of-order frame index");
    for (const Detection& d : dets)
      if (d.frame != t)
        throw std::invalid_argument("OnlineTracker: detection frame mismatch");
    cursor_ = t;

    // Predict every active trajectory, occluded ones included, so the
    // reappearance gate sees a motion-extrapolated box.
    for (Trajectory& traj : trajectories_) {
      double pano_width = traj.last_entry().box.pano_width;
      auto [next, predicted] = kalman_predict(traj.motion(), pano_width);
      traj.set_motion(next);
      (void)predicted;
    }

    AffinityMatrix A = affinity_matrix(
        std::span<const Trajectory>(trajectories_.data(), trajectories_.size()),
        dets, t, config_.affinity);
    MatchingMatrix X = solve_matching(A, config_.objective);
    MatchResult res = gate(X, A, config_.affinity.gate_theta);

    for (auto [u, v] : res.pairs) {
      Trajectory& traj = trajectories_[u];
      traj = extend(traj, dets[v]);
      traj.set_motion(kalman_update(traj.motion(), dets[v].box));
      traj.hits += 1;
      traj.misses = 0;
      detail::maybe_confirm(traj, config_.confirm_hits);
    }

    for (int u : res.unmatched_trajs) {
      Trajectory& traj = trajectories_[u];
      traj.misses += 1;
      // Tentative tracks die on their first miss; confirmed tracks survive
      // the occlusion window.
      if (traj.state() == TrackState::Tentative ||
          traj.misses > config_.max_misses)
        traj.remove();
    }

    for (int v : res.unmatched_dets) {
      trajectories_.push_back(init_tentative(dets[v], next_id_++));
      detail::maybe_confirm(trajectories_.back(), config_.confirm_hits);
    }

    std::erase_if(trajectories_, [](const Trajectory& traj) {
      return traj.state() == TrackState::Removed;
    });

    std::vector<TrackOutput> emitted;
    for (const Trajectory& traj : trajectories_)
      if (traj.state() == TrackState::Confirmed && traj.last_frame() == t)
        emitted.push_back({t, traj.id(), traj.last_entry().box});
    return emitted;
  }

  const std::vector<Trajectory>& trajectories() const { return trajectories_; }
  std::optional<int> cursor() const { return cursor_; }
  int next_id() const { return next_id_; }
  const TrackerConfig& config() const { return config_; }

 private:
  TrackerConfig config_;
  std::vector<Trajectory> trajectories_;  // tentative + confirmed
  std::optional<int> cursor_;
  int next_id_ = 1;
};

}  // namespace panotrack
