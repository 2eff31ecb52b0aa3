#pragma once

#include "agility/sim/types.hpp"

namespace agility::estimator {

inline constexpr double kSigmaFloor = 1e-6;

/// Neural velocity mean with a diagonal covariance, both in the body frame.
struct VelocityEstimate {
  sim::Vec3 v_net{};
  sim::Vec3 sigma{1.0, 1.0, 1.0};  // variances, (m/s)^2

  bool operator==(const VelocityEstimate&) const = default;
};

}  // namespace agility::estimator
