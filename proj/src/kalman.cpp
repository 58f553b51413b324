#include "runperf/kalman.hpp"

namespace runperf {

namespace {

Eigen::Matrix<double, 4, 8> observation_matrix() {
  Eigen::Matrix<double, 4, 8> H = Eigen::Matrix<double, 4, 8>::Zero();
  H.leftCols<4>().setIdentity();
  return H;
}

MeasurementCovariance measurement_noise(double height, const KalmanConfig& c, double scale) {
  const double pos = c.measurement_std_weight * height;
  Measurement std_dev(pos, pos, c.aspect_measurement_std, pos);
  return (scale * std_dev.array().square()).matrix().asDiagonal();
}

}  // namespace

Measurement to_measurement(const BBox& box) { return {box.cx, box.cy, box.w / box.h, box.h}; }

BBox to_bbox(const StateVector& mean) { return {mean(0), mean(1), mean(2) * mean(3), mean(3)}; }

KalmanState kalman_initiate(const BBox& box, const KalmanConfig& c) {
  if (!(box.w > 0.0) || !(box.h > 0.0)) throw Error("kalman_initiate: box must have positive size");
  KalmanState s;
  s.mean.setZero();
  s.mean.head<4>() = to_measurement(box);
  const double h = box.h;
  StateVector std_dev;
  std_dev << 2 * c.process_std_weight_position * h, 2 * c.process_std_weight_position * h, 1e-2,
      2 * c.process_std_weight_position * h, 10 * c.process_std_weight_velocity * h,
      10 * c.process_std_weight_velocity * h, 1e-5, 10 * c.process_std_weight_velocity * h;
  s.covariance = std_dev.array().square().matrix().asDiagonal();
  return s;
}

KalmanState kalman_predict(const KalmanState& s, double dt, const KalmanConfig& c) {
  StateCovariance F = StateCovariance::Identity();
  for (int i = 0; i < 4; ++i) F(i, i + 4) = dt;
  const double h = s.mean(3);
  StateVector std_dev;
  std_dev << c.process_std_weight_position * h, c.process_std_weight_position * h, c.aspect_process_std,
      c.process_std_weight_position * h, c.process_std_weight_velocity * h, c.process_std_weight_velocity * h,
      c.aspect_velocity_process_std, c.process_std_weight_velocity * h;
  const StateCovariance Q = (dt * std_dev.array().square()).matrix().asDiagonal();

  KalmanState out;
  out.mean = F * s.mean;
  out.covariance = F * s.covariance * F.transpose() + Q;
  out.covariance = (0.5 * (out.covariance + out.covariance.transpose())).eval();
  return out;
}

Projection kalman_project(const KalmanState& s, const KalmanConfig& c, double noise_scale) {
  const auto H = observation_matrix();
  Projection p;
  p.mean = H * s.mean;
  p.covariance = H * s.covariance * H.transpose() + measurement_noise(s.mean(3), c, noise_scale);
  return p;
}

KalmanState kalman_update(const KalmanState& s, const BBox& box, const KalmanConfig& c, double noise_scale) {
  if (!(box.w > 0.0) || !(box.h > 0.0)) throw Error("kalman_update: measurement must have positive size");
  const auto H = observation_matrix();
  const MeasurementCovariance R = measurement_noise(s.mean(3), c, noise_scale);
  const MeasurementCovariance S = H * s.covariance * H.transpose() + R;
  const Eigen::LLT<MeasurementCovariance> llt(S);
  if (llt.info() != Eigen::Success) throw Error("kalman_update: innovation covariance is singular");

  // K = P H^T S^-1, computed as (S^-1 H P)^T.
  const Eigen::Matrix<double, 8, 4> K = llt.solve(H * s.covariance).transpose();
  const Measurement innovation = to_measurement(box) - H * s.mean;

  KalmanState out;
  out.mean = s.mean + K * innovation;
  const StateCovariance I_KH = StateCovariance::Identity() - K * H;
  out.covariance = I_KH * s.covariance * I_KH.transpose() + K * R * K.transpose();
  out.covariance = (0.5 * (out.covariance + out.covariance.transpose())).eval();
  return out;
}

double squared_mahalanobis(const Projection& p, const Measurement& z) {
  const Eigen::LLT<MeasurementCovariance> llt(p.covariance);
  if (llt.info() != Eigen::Success) throw Error("squared_mahalanobis: covariance is not positive definite");
  const Measurement d = z - p.mean;
  const Measurement y = llt.matrixL().solve(d);
  return y.squaredNorm();
}

std::vector<bool> gate(const KalmanState& state, std::span<const Detection> detections, const KalmanConfig& config,
                       double threshold) {
  const Projection p = kalman_project(state, config);
  std::vector<bool> mask;
  mask.reserve(detections.size());
  for (const auto& d : detections) mask.push_back(squared_mahalanobis(p, to_measurement(d.bbox)) <= threshold);
  return mask;
}

}  // namespace runperf
