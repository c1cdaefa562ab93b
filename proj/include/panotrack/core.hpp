#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Core domain types shared by every module. All types validate their
// invariants at construction and are plain values afterwards; they can be
// copied and shared across threads freely.

namespace panotrack {

inline bool is_finite(double v) { return std::isfinite(v); }

// Reduces a column coordinate into [0, W) on the circular axis.
inline double wrap_column(double x, double pano_width) {
  double r = std::fmod(x, pano_width);
  if (r < 0.0) r += pano_width;
  if (r >= pano_width) r = 0.0;  // fmod can land exactly on W
  return r;
}

// Half-open column interval [begin, end) with end <= W.
struct ColumnSpan {
  double begin = 0.0;
  double end = 0.0;
  double length() const { return end - begin; }
};

// One or two disjoint column intervals covered by a box on the circular axis.
struct ColumnIntervals {
  std::array<ColumnSpan, 2> spans{};
  int count = 0;

  const ColumnSpan* begin() const { return spans.data(); }
  const ColumnSpan* end() const { return spans.data() + count; }
  double total_length() const {
    double len = 0.0;
    for (int i = 0; i < count; ++i) len += spans[i].length();
    return len;
  }
};

// Axis-aligned 2D box on a 360-degree panorama. The column axis is circular
// with period pano_width; a box whose right edge passes the seam covers
// [x, W) plus [0, x + w - W). Rows are ordinary (no vertical wrap).
struct PanoBox {
  double x = 0.0;       // left edge, in [0, W)
  double y = 0.0;       // top edge
  double w = 1.0;       // width in (0, W]
  double h = 1.0;       // height, > 0
  double score = 1.0;   // detector confidence in [0, 1]
  double pano_width = 1.0;

  PanoBox() = default;
  PanoBox(double x_, double y_, double w_, double h_, double score_,
          double pano_width_)
      : x(x_), y(y_), w(w_), h(h_), score(score_), pano_width(pano_width_) {
    if (!(is_finite(x) && is_finite(y) && is_finite(w) && is_finite(h) &&
          is_finite(score) && is_finite(pano_width)))
      throw std::invalid_argument("PanoBox: non-finite field");
    if (!(pano_width > 0.0))
      throw std::invalid_argument("PanoBox: pano_width must be positive");
    if (!(x >= 0.0 && x < pano_width))
      throw std::invalid_argument("PanoBox: x outside [0, W)");
    if (!(w > 0.0 && w <= pano_width))
      throw std::invalid_argument("PanoBox: w outside (0, W]");
    if (!(h > 0.0)) throw std::invalid_argument("PanoBox: h must be positive");
    if (!(score >= 0.0 && score <= 1.0))
      throw std::invalid_argument("PanoBox: score outside [0, 1]");
  }

  bool wraps() const { return x + w > pano_width; }
  double area() const { return w * h; }
  // Box center column, reduced into [0, W).
  double center_x() const { return wrap_column(x + 0.5 * w, pano_width); }
  double center_y() const { return y + 0.5 * h; }
  double aspect() const { return w / h; }
};

// Covered column set of a box: one interval when the box does not cross the
// seam, two otherwise. Total length always equals box.w.
inline ColumnIntervals pano_box_columns(const PanoBox& box) {
  ColumnIntervals out;
  if (box.wraps()) {
    out.spans[0] = {box.x, box.pano_width};
    out.spans[1] = {0.0, box.x + box.w - box.pano_width};
    out.count = 2;
  } else {
    out.spans[0] = {box.x, box.x + box.w};
    out.count = 1;
  }
  return out;
}

// A single frame observation: box, appearance embedding and, when the point
// cloud produced one, a 3D location in meters.
struct Detection {
  PanoBox box;
  Eigen::VectorXd embedding;  // L2-normalized, fixed dimension per run
  std::optional<Eigen::Vector3d> location;
  int frame = 0;

  Detection() = default;
  Detection(PanoBox box_, Eigen::VectorXd embedding_,
            std::optional<Eigen::Vector3d> location_, int frame_)
      : box(std::move(box_)),
        embedding(std::move(embedding_)),
        location(std::move(location_)),
        frame(frame_) {
    if (embedding.size() == 0)
      throw std::invalid_argument("Detection: empty embedding");
    if (!embedding.allFinite())
      throw std::invalid_argument("Detection: non-finite embedding");
    if (std::abs(embedding.norm() - 1.0) > 1e-6)
      throw std::invalid_argument("Detection: embedding not L2-normalized");
    if (location && !location->allFinite())
      throw std::invalid_argument("Detection: non-finite location");
  }
};

// Motion state of one trajectory: (cx, cy, aspect, height) and their
// per-frame velocities, with full covariance.
struct KalmanState {
  Eigen::Matrix<double, 8, 1> mean = Eigen::Matrix<double, 8, 1>::Zero();
  Eigen::Matrix<double, 8, 8> covariance =
      Eigen::Matrix<double, 8, 8>::Identity();

  KalmanState() = default;
  KalmanState(const Eigen::Matrix<double, 8, 1>& mean_,
              const Eigen::Matrix<double, 8, 8>& covariance_)
      : mean(mean_), covariance(covariance_) {
    if (!mean.allFinite() || !covariance.allFinite())
      throw std::invalid_argument("KalmanState: non-finite state");
    if (((covariance - covariance.transpose()).cwiseAbs().maxCoeff()) > 1e-9)
      throw std::invalid_argument("KalmanState: covariance not symmetric");
    if (covariance.diagonal().minCoeff() <= 0.0)
      throw std::invalid_argument("KalmanState: non-positive variance");
  }
};

enum class TrackState { Tentative, Confirmed, Removed };

inline const char* to_string(TrackState s) {
  switch (s) {
    case TrackState::Tentative: return "tentative";
    case TrackState::Confirmed: return "confirmed";
    case TrackState::Removed: return "removed";
  }
  return "?";
}

struct TrajectoryEntry {
  int frame = 0;
  Eigen::VectorXd appearance;
  PanoBox box;
  std::optional<Eigen::Vector3d> location;
};

// One tracked target: the per-frame (appearance, box, location) tuples it
// accumulated, its lifecycle state and its motion filter state. Entries are
// strictly increasing in frame; lifecycle moves only along
// Tentative -> {Confirmed, Removed} and Confirmed -> Removed.
class Trajectory {
 public:
  Trajectory(int id, TrajectoryEntry first, KalmanState motion)
      : id_(id), motion_(std::move(motion)) {
    entries_.push_back(std::move(first));
  }

  int id() const { return id_; }
  TrackState state() const { return state_; }
  const std::vector<TrajectoryEntry>& entries() const { return entries_; }
  const TrajectoryEntry& last_entry() const { return entries_.back(); }
  int last_frame() const { return entries_.back().frame; }
  const KalmanState& motion() const { return motion_; }
  void set_motion(KalmanState m) { motion_ = std::move(m); }

  int hits = 1;    // consecutive matched frames, counting the initial one
  int misses = 0;  // frames since the last match

  void append(TrajectoryEntry entry) {
    if (entry.frame <= entries_.back().frame)
      throw std::invalid_argument("Trajectory: non-increasing entry frame");
    entries_.push_back(std::move(entry));
  }

  void confirm() {
    if (state_ != TrackState::Tentative)
      throw std::logic_error("Trajectory: only tentative tracks confirm");
    state_ = TrackState::Confirmed;
  }

  void remove() {
    if (state_ == TrackState::Removed)
      throw std::logic_error("Trajectory: already removed");
    state_ = TrackState::Removed;
  }

 private:
  int id_;
  TrackState state_ = TrackState::Tentative;
  std::vector<TrajectoryEntry> entries_;
  KalmanState motion_;
};

// Nonnegative trajectory-by-detection affinity scores.
class AffinityMatrix {
 public:
  AffinityMatrix() : values_(0, 0) {}
  explicit AffinityMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
    if (!values_.allFinite())
      throw std::invalid_argument("AffinityMatrix: non-finite entry");
    if (values_.size() > 0 && values_.minCoeff() < 0.0)
      throw std::invalid_argument("AffinityMatrix: negative entry");
  }

  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }
  double operator()(Eigen::Index u, Eigen::Index v) const {
    return values_(u, v);
  }
  const Eigen::MatrixXd& matrix() const { return values_; }

 private:
  Eigen::MatrixXd values_;
};

// Binary assignment with every row and column used at most once. Stored as
// the row -> column map, which makes the mutual-exclusion constraints hold
// by construction.
class MatchingMatrix {
 public:
  MatchingMatrix(int rows, int cols)
      : cols_(cols), row_to_col_(static_cast<size_t>(rows), -1) {
    if (rows < 0 || cols < 0)
      throw std::invalid_argument("MatchingMatrix: negative shape");
  }

  int rows() const { return static_cast<int>(row_to_col_.size()); }
  int cols() const { return cols_; }

  void match(int row, int col) {
    if (row < 0 || row >= rows() || col < 0 || col >= cols_)
      throw std::out_of_range("MatchingMatrix: index out of range");
    if (row_to_col_[row] != -1)
      throw std::logic_error("MatchingMatrix: row already matched");
    for (int c : row_to_col_)
      if (c == col) throw std::logic_error("MatchingMatrix: column already matched");
    row_to_col_[row] = col;
  }

  // -1 when the row is unmatched.
  int col_of(int row) const { return row_to_col_.at(row); }

  int operator()(int row, int col) const {
    return row_to_col_.at(row) == col ? 1 : 0;
  }

  int row_sum(int row) const { return row_to_col_.at(row) == -1 ? 0 : 1; }
  int col_sum(int col) const {
    int s = 0;
    for (int c : row_to_col_)
      if (c == col) ++s;
    return s;
  }

  std::vector<std::pair<int, int>> pairs() const {
    std::vector<std::pair<int, int>> out;
    for (int u = 0; u < rows(); ++u)
      if (row_to_col_[u] != -1) out.emplace_back(u, row_to_col_[u]);
    return out;
  }

 private:
  int cols_;
  std::vector<int> row_to_col_;
};

}  // namespace panotrack
