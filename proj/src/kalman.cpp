#include "prt/kalman.hpp"

namespace prt {

namespace {

using Mat8 = Eigen::Matrix<double, 8, 8>;
using Mat48 = Eigen::Matrix<double, 4, 8>;

Mat8 transition() {
  Mat8 f = Mat8::Identity();
  for (int i = 0; i < 4; ++i) f(i, i + 4) = 1.0;
  return f;
}

Mat48 observation() {
  Mat48 h = Mat48::Zero();
  for (int i = 0; i < 4; ++i) h(i, i) = 1.0;
  return h;
}

Mat8 symmetrize(const Mat8& p) { return 0.5 * (p + p.transpose()); }

}  // namespace

Eigen::Vector4d to_measurement(const BoundingBox& box) {
  return {box.cx(), box.cy(), box.w / box.h, box.h};
}

KalmanState kalman_initiate(const BoundingBox& box, const KalmanNoise& noise) {
  KalmanState s;
  s.mean.head<4>() = to_measurement(box);
  s.mean.tail<4>().setZero();
  const double h = box.h;
  Eigen::Matrix<double, 8, 1> std;
  std << 2 * noise.position * h, 2 * noise.position * h, 1e-2, 2 * noise.position * h,
      10 * noise.velocity * h, 10 * noise.velocity * h, 1e-5, 10 * noise.velocity * h;
  s.covariance = std.array().square().matrix().asDiagonal();
  return s;
}

KalmanState kalman_predict(const KalmanState& state, const KalmanNoise& noise) {
  const double h = state.mean(3);
  Eigen::Matrix<double, 8, 1> std;
  std << noise.position * h, noise.position * h, 1e-2, noise.position * h, noise.velocity * h,
      noise.velocity * h, 1e-5, noise.velocity * h;
  const Mat8 q = std.array().square().matrix().asDiagonal();
  static const Mat8 f = transition();
  KalmanState out;
  out.mean = f * state.mean;
  out.covariance = symmetrize(f * state.covariance * f.transpose() + q);
  return out;
}

KalmanState kalman_update(const KalmanState& state, const BoundingBox& measurement,
                          const KalmanNoise& noise) {
  static const Mat48 h_mat = observation();
  const double h = state.mean(3);
  Eigen::Vector4d r_std(noise.position * h, noise.position * h, 1e-1, noise.position * h);
  const Eigen::Matrix4d r = r_std.array().square().matrix().asDiagonal();

  const Eigen::Vector4d projected = h_mat * state.mean;
  const Eigen::Matrix4d s = h_mat * state.covariance * h_mat.transpose() + r;
  const Eigen::Matrix<double, 8, 4> pht = state.covariance * h_mat.transpose();
  const Eigen::Matrix<double, 8, 4> gain = s.llt().solve(pht.transpose()).transpose();

  KalmanState out;
  out.mean = state.mean + gain * (to_measurement(measurement) - projected);
  out.covariance = symmetrize(state.covariance - gain * s * gain.transpose());
  return out;
}

}  // namespace prt
