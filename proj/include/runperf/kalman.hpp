#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "runperf/common.hpp"
#include "runperf/dataio.hpp"

namespace runperf {

using StateVector = Eigen::Matrix<double, 8, 1>;
using StateCovariance = Eigen::Matrix<double, 8, 8>;
using Measurement = Eigen::Matrix<double, 4, 1>;
using MeasurementCovariance = Eigen::Matrix<double, 4, 4>;

/// 0.95 quantile of the chi-square distribution with 4 degrees of freedom.
inline constexpr double kChiSquare95Dof4 = 9.4877;

/// Noise model of the constant-velocity filter. Position and height noise
/// scale with the current box height.
struct KalmanConfig {
  double measurement_std_weight = 1.0 / 20.0;
  double process_std_weight_position = 1.0 / 20.0;
  double process_std_weight_velocity = 1.0 / 160.0;
  double aspect_measurement_std = 1e-1;
  double aspect_process_std = 1e-2;
  double aspect_velocity_process_std = 1e-5;
};

/// State (cx, cy, a = w/h, h, and their per-frame velocities).
struct KalmanState {
  StateVector mean = StateVector::Zero();
  StateCovariance covariance = StateCovariance::Identity();
};

/// Measurement-space distribution of a state.
struct Projection {
  Measurement mean;
  MeasurementCovariance covariance;
};

Measurement to_measurement(const BBox& box);
BBox to_bbox(const StateVector& mean);

KalmanState kalman_initiate(const BBox& box, const KalmanConfig& config = {});

/// Advances the state by `dt` frames; process noise grows linearly with dt.
KalmanState kalman_predict(const KalmanState& state, double dt = 1.0, const KalmanConfig& config = {});

/// `noise_scale` multiplies the measurement covariance.
Projection kalman_project(const KalmanState& state, const KalmanConfig& config = {}, double noise_scale = 1.0);

/// Joseph-form update with measurement `box`. Throws when the innovation
/// covariance is not positive definite.
KalmanState kalman_update(const KalmanState& state, const BBox& box, const KalmanConfig& config = {},
                          double noise_scale = 1.0);

double squared_mahalanobis(const Projection& projection, const Measurement& z);

/// True for each detection whose squared Mahalanobis distance to the
/// projected state is within `threshold`.
std::vector<bool> gate(const KalmanState& state, std::span<const Detection> detections,
                       const KalmanConfig& config = {}, double threshold = kChiSquare95Dof4);

}  // namespace runperf
