#pragma once

#include <cstdint>

#include "agility/sim/config.hpp"
#include "agility/sim/types.hpp"

namespace agility::sim {

/// Leg geometry of a mid-size quadruped (thigh and calf 0.213 m).
struct LegGeometry {
  double thigh = 0.213;
  double calf = 0.213;
  double hip_x = 0.1934;
  double hip_y = 0.142;
  double nominal_height = 0.30;
};

/// Joint angles (abduction, hip, knee) placing the foot at `p`, expressed
/// relative to the hip in the body frame. Out-of-reach targets are pulled in
/// to 98% of full extension.
std::array<double, 3> leg_ik(const Vec3& p, const LegGeometry& geo = {});
Vec3 leg_fk(const std::array<double, 3>& q, const LegGeometry& geo = {});

/// Seeded episode. Body velocity follows smoothed random commands, receives
/// XY pushes every `push_interval` seconds, and is interrupted by slip
/// (velocity jump, sliding feet, IMU noise burst) and flight (no contacts,
/// ballistic vertical motion, tucked legs) events. The IMU acceleration is
/// the exact discrete inverse of v_t = v_{t-1} + (a_t - w_t x v_{t-1}) dt
/// before noise is added.
Trajectory generate_trajectory(std::uint64_t seed, std::uint32_t episode,
                               const SimConfig& cfg);

/// `cfg.episodes` trajectories, episode i generated from (seed, i).
Dataset generate_dataset(std::uint64_t seed, const SimConfig& cfg);

/// Velocity propagation used by the filter's prediction step, exposed for
/// dead-reckoning checks.
Vec3 propagate_velocity(const Vec3& v, const Vec3& accel, const Vec3& omega,
                        double dt);

}  // namespace agility::sim
