#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "panotrack/core.hpp"

// Constant-velocity Kalman filter over the box state
// (cx, cy, aspect, height, vcx, vcy, va, vh), one tick per frame.
// The center column lives on the circular axis: predictions wrap modulo W
// and measurements are moved to the seam-nearest representative of the
// predicted center before correction, so a target crossing the seam never
// produces a ~W innovation jump.

namespace panotrack {
namespace kalman {

// Noise scales relative to box height, following the common
// pedestrian-tracking convention. The velocity scale is set so a constant
// velocity is learned within a handful of frames (predicted-center error
// under half a pixel by frame ten on a clean track).
inline constexpr double kStdWeightPosition = 1.0 / 20.0;
inline constexpr double kStdWeightVelocity = 1.0 / 80.0;

// Generic gain-weighted correction (Joseph form, keeps the posterior
// covariance symmetric positive-definite). Works for any state/measurement
// dimension; the box filter uses it with 8/4.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> correct(
    const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance,
    const Eigen::VectorXd& measurement, const Eigen::MatrixXd& H,
    const Eigen::MatrixXd& R) {
  if (!measurement.allFinite())
    throw std::invalid_argument("kalman::correct: non-finite measurement");
  const Eigen::MatrixXd S = H * covariance * H.transpose() + R;
  const Eigen::MatrixXd K =
      S.ldlt().solve(H * covariance.transpose()).transpose();
  const Eigen::VectorXd innovation = measurement - H * mean;
  Eigen::VectorXd post_mean = mean + K * innovation;
  const Eigen::MatrixXd I =
      Eigen::MatrixXd::Identity(mean.size(), mean.size());
  const Eigen::MatrixXd IKH = I - K * H;
  Eigen::MatrixXd post_cov =
      IKH * covariance * IKH.transpose() + K * R * K.transpose();
  post_cov = 0.5 * (post_cov + post_cov.transpose()).eval();
  return {std::move(post_mean), std::move(post_cov)};
}

}  // namespace kalman

// Measurement vector (cx, cy, aspect, height) of a box; cx is the circular
// center.
inline Eigen::Vector4d box_measurement(const PanoBox& box) {
  return {box.center_x(), box.center_y(), box.aspect(), box.h};
}

// Reconstructs a box from a filter mean. Width and height are clamped to
// stay inside the PanoBox domain when the state drifts degenerate.
inline PanoBox box_from_state(const Eigen::Matrix<double, 8, 1>& mean,
                              double pano_width) {
  double h = std::max(mean(3), 1e-6);
  double w = std::min(std::max(mean(2) * h, 1e-6), pano_width);
  double x = wrap_column(mean(0) - 0.5 * w, pano_width);
  double y = mean(1) - 0.5 * h;
  return PanoBox(x, y, w, h, 1.0, pano_width);
}

// Fresh motion state at a detection box: zero velocity, inflated covariance.
inline KalmanState init_box_state(const PanoBox& box) {
  Eigen::Matrix<double, 8, 1> mean;
  mean << box_measurement(box), Eigen::Vector4d::Zero();
  Eigen::Matrix<double, 8, 1> stddev;
  double h = box.h;
  stddev << 2 * kalman::kStdWeightPosition * h,
      2 * kalman::kStdWeightPosition * h, 1e-2,
      2 * kalman::kStdWeightPosition * h,
      10 * kalman::kStdWeightVelocity * h,
      10 * kalman::kStdWeightVelocity * h, 1e-5,
      10 * kalman::kStdWeightVelocity * h;
  return KalmanState(mean, stddev.array().square().matrix().asDiagonal());
}

// One constant-velocity transition. Returns the propagated state and the
// predicted box for the coming frame, center wrapped into [0, W).
inline std::pair<KalmanState, PanoBox> kalman_predict(const KalmanState& state,
                                                      double pano_width) {
  Eigen::Matrix<double, 8, 8> F = Eigen::Matrix<double, 8, 8>::Identity();
  for (int i = 0; i < 4; ++i) F(i, i + 4) = 1.0;

  double h = std::max(state.mean(3), 1e-6);
  Eigen::Matrix<double, 8, 1> stddev;
  stddev << kalman::kStdWeightPosition * h, kalman::kStdWeightPosition * h,
      1e-2, kalman::kStdWeightPosition * h, kalman::kStdWeightVelocity * h,
      kalman::kStdWeightVelocity * h, 1e-5, kalman::kStdWeightVelocity * h;
  Eigen::Matrix<double, 8, 8> process_noise =
      stddev.array().square().matrix().asDiagonal();

  Eigen::Matrix<double, 8, 1> mean = F * state.mean;
  mean(0) = wrap_column(mean(0), pano_width);
  Eigen::Matrix<double, 8, 8> cov =
      F * state.covariance * F.transpose() + process_noise;
  cov = 0.5 * (cov + cov.transpose()).eval();
  KalmanState next(mean, cov);
  PanoBox predicted = box_from_state(mean, pano_width);
  return {std::move(next), std::move(predicted)};
}

// Gain-weighted correction with the measured box. The measured center is
// first replaced by its representative within W/2 of the predicted center.
inline KalmanState kalman_update(const KalmanState& state,
                                 const PanoBox& measured) {
  double pano_width = measured.pano_width;
  Eigen::Vector4d z = box_measurement(measured);
  double predicted_cx = state.mean(0);
  for (double cand : {z(0) - pano_width, z(0) + pano_width})
    if (std::abs(cand - predicted_cx) < std::abs(z(0) - predicted_cx))
      z(0) = cand;

  Eigen::Matrix<double, 4, 8> H = Eigen::Matrix<double, 4, 8>::Zero();
  H.block<4, 4>(0, 0).setIdentity();
  double h = std::max(state.mean(3), 1e-6);
  Eigen::Vector4d stddev(kalman::kStdWeightPosition * h,
                         kalman::kStdWeightPosition * h, 1e-1,
                         kalman::kStdWeightPosition * h);
  Eigen::Matrix4d R = stddev.array().square().matrix().asDiagonal();

  auto [mean, cov] = kalman::correct(state.mean, state.covariance, z, H, R);
  Eigen::Matrix<double, 8, 1> m = mean;
  m(0) = wrap_column(m(0), pano_width);
  return KalmanState(m, cov);
}

}  // namespace panotrack
