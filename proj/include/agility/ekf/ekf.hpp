#pragma once

#include <iosfwd>
#include <vector>

#include "agility/estimator/estimate.hpp"
#include "agility/sim/types.hpp"

namespace agility::ekf {

using sim::Vec3;

struct EkfConfig {
  Vec3 process_noise{1e-3, 1e-3, 1e-3};  // added to P every step
  Vec3 initial_variance{0.1, 0.1, 0.1};
  double dt = 0.02;

  /// Throws ConfigError unless every entry is strictly positive.
  void validate() const;
};

struct FilterState {
  Vec3 v{};
  Vec3 P{0.1, 0.1, 0.1};
  double t = 0.0;
};

/// v' = v + (a - w x v) dt, P' = P + F.
FilterState predict(const FilterState& s, const Vec3& accel, const Vec3& omega,
                    const EkfConfig& cfg);

struct UpdateResult {
  FilterState state;
  Vec3 gain{};
};

/// Per-axis Kalman update with E = P / (P + sigma). Sigma is clamped to the
/// estimator floor.
UpdateResult update(const FilterState& s, const estimator::VelocityEstimate& meas);

struct FilterStep {
  double t = 0.0;
  Vec3 v_gt{};
  estimator::VelocityEstimate meas;
  Vec3 v_fused{};
  Vec3 P{};
  Vec3 gain{};
};

/// Starts from v = 0, P = P0 at the first frame, which is updated without a
/// prediction; every later frame is predicted with its own IMU sample and then
/// updated. `meas` must hold one estimate per frame. Throws Error when a
/// timestamp gap differs from cfg.dt by more than 1e-9.
std::vector<FilterStep> run_filter(const std::vector<sim::ProprioFrame>& frames,
                                   const std::vector<estimator::VelocityEstimate>& meas,
                                   const EkfConfig& cfg);

/// Header t,v_gt_x,...,gain_z then one row per step.
void write_filter_csv(const std::vector<FilterStep>& steps, std::ostream& out);

}  // namespace agility::ekf
