#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "panotrack/core.hpp"

// LiDAR-camera fusion: project 3D points through the scene's projection
// matrix, collect the points falling inside a detection box, trim them to a
// range-percentile band to approximate the foreground, and average the
// survivors into the detection's 3D location.

namespace panotrack {

// Points behind the camera closer than this depth are rejected outright.
inline constexpr double kDepthEpsilon = 1e-6;

struct Calibration {
  Eigen::Matrix<double, 3, 4> projection;  // 3D meters -> homogeneous pixels
  double pano_width = 0.0;
  double pano_height = 0.0;

  Calibration() { projection.setZero(); }
  Calibration(const Eigen::Matrix<double, 3, 4>& projection_,
              double pano_width_, double pano_height_)
      : projection(projection_),
        pano_width(pano_width_),
        pano_height(pano_height_) {
    if (!projection.allFinite())
      throw std::invalid_argument("Calibration: non-finite projection");
    if (std::abs(projection.block<3, 3>(0, 0).determinant()) < 1e-12)
      throw std::invalid_argument("Calibration: singular projection block");
    if (!(pano_width > 0.0) || !(pano_height > 0.0))
      throw std::invalid_argument("Calibration: non-positive image size");
  }
};

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  int frame = 0;
};

// Percentile band over the in-box range distribution, [lo, hi] in percent.
struct DepthBand {
  double lo = 10.0;
  double hi = 80.0;

  void validate() const {
    if (!(lo >= 0.0 && hi <= 100.0 && lo < hi))
      throw std::invalid_argument("DepthBand: need 0 <= lo < hi <= 100");
  }
};

// Homogeneous projection with perspective divide. Returns nothing when the
// point is behind the camera or the pixel falls outside the image.
inline std::optional<Eigen::Vector2d> project_point(const Eigen::Vector3d& h,
                                                    const Calibration& calib) {
  if (!h.allFinite())
    throw std::invalid_argument("project_point: non-finite point");
  Eigen::Vector4d hom(h.x(), h.y(), h.z(), 1.0);
  Eigen::Vector3d p = calib.projection * hom;
  if (p.z() <= kDepthEpsilon) return std::nullopt;
  double u = p.x() / p.z();
  double v = p.y() / p.z();
  if (u < 0.0 || u >= calib.pano_width || v < 0.0 || v >= calib.pano_height)
    return std::nullopt;
  return Eigen::Vector2d(u, v);
}

namespace detail {

inline bool column_in_box(double u, const ColumnIntervals& cols) {
  for (const ColumnSpan& s : cols)
    if (u >= s.begin && u < s.end) return true;
  return false;
}

// Linear-interpolation percentile of sorted values.
inline double percentile(const std::vector<double>& sorted, double p) {
  if (sorted.empty())
    throw std::invalid_argument("percentile: empty sample");
  if (sorted.size() == 1) return sorted.front();
  double pos = (p / 100.0) * static_cast<double>(sorted.size() - 1);
  size_t lo = static_cast<size_t>(std::floor(pos));
  size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

// Conservative frustum pre-cull with one pixel of slack: anything the exact
// in-box test would accept always survives, so the cull only saves time.
// Wrapped boxes skip the column planes (their column set is not convex).
inline bool frustum_candidate(const Eigen::Vector3d& h, const PanoBox& box,
                              const Calibration& calib) {
  Eigen::Vector4d hom(h.x(), h.y(), h.z(), 1.0);
  const auto& M = calib.projection;
  double depth = M.row(2).dot(hom);
  if (depth <= kDepthEpsilon) return false;
  double slack = 1.0;
  double num_v = M.row(1).dot(hom);
  if (num_v < (box.y - slack) * depth) return false;
  if (num_v > (box.y + box.h + slack) * depth) return false;
  if (!box.wraps()) {
    double num_u = M.row(0).dot(hom);
    if (num_u < (box.x - slack) * depth) return false;
    if (num_u > (box.x + box.w + slack) * depth) return false;
  }
  return true;
}

}  // namespace detail

// Collects the cloud points whose projection falls inside the box, then
// keeps only those whose range (distance to the sensor origin) lies within
// the given percentile band of the in-box range distribution. Band [0, 100]
// returns the exact in-box set.
inline std::vector<Eigen::Vector3d> collect_points(const PanoBox& box,
                                                   const PointCloud& cloud,
                                                   const Calibration& calib,
                                                   const DepthBand& band) {
  band.validate();
  ColumnIntervals cols = pano_box_columns(box);

  std::vector<Eigen::Vector3d> inside;
  for (const Eigen::Vector3d& h : cloud.points) {
    if (!detail::frustum_candidate(h, box, calib)) continue;
    std::optional<Eigen::Vector2d> px = project_point(h, calib);
    if (!px) continue;
    if (!detail::column_in_box(px->x(), cols)) continue;
    if (px->y() < box.y || px->y() >= box.y + box.h) continue;
    inside.push_back(h);
  }
  if (inside.empty()) return inside;

  std::vector<double> ranges(inside.size());
  for (size_t i = 0; i < inside.size(); ++i) ranges[i] = inside[i].norm();
  std::vector<double> sorted = ranges;
  std::sort(sorted.begin(), sorted.end());
  double lo = detail::percentile(sorted, band.lo);
  double hi = detail::percentile(sorted, band.hi);

  std::vector<Eigen::Vector3d> kept;
  kept.reserve(inside.size());
  for (size_t i = 0; i < inside.size(); ++i)
    if (ranges[i] >= lo && ranges[i] <= hi) kept.push_back(inside[i]);
  return kept;
}

// Arithmetic mean of the point set; nothing when the set is empty, in which
// case the detection carries no location.
inline std::optional<Eigen::Vector3d> locate(
    std::span<const Eigen::Vector3d> points) {
  if (points.empty()) return std::nullopt;
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const Eigen::Vector3d& p : points) sum += p;
  return Eigen::Vector3d(sum / static_cast<double>(points.size()));
}

}  // namespace panotrack
