#pragma once

#include "prt/core.hpp"

namespace prt {

/// Constant-velocity box filter on (cx, cy, aspect, height) with process and
/// measurement noise proportional to the box height.
struct KalmanNoise {
  double position = 1.0 / 20.0;
  double velocity = 1.0 / 160.0;
};

Eigen::Vector4d to_measurement(const BoundingBox& box);

KalmanState kalman_initiate(const BoundingBox& box, const KalmanNoise& noise = {});
KalmanState kalman_predict(const KalmanState& state, const KalmanNoise& noise = {});
KalmanState kalman_update(const KalmanState& state, const BoundingBox& measurement,
                          const KalmanNoise& noise = {});

}  // namespace prt
