#pragma once

#include <string>

namespace agility::sim {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Range&) const = default;
};

/// Generator settings. Domain-randomization ranges default to a mid-size quadruped's
/// training distribution; noise amplitudes are half-widths of uniform noise.
struct SimConfig {
  double dt = 0.02;
  double duration = 20.0;  // s per episode
  int episodes = 30;

  // Commanded motion
  Range forward_speed{0.4, 1.6};
  Range lateral_speed{-0.3, 0.3};
  Range yaw_rate{-0.6, 0.6};
  double command_hold = 2.0;  // s between new velocity commands
  double velocity_time_constant = 0.4;
  double bounce_amplitude = 0.01;  // m, twice per gait cycle
  double attitude_amplitude = 0.04;  // rad, roll/pitch sway
  double gait_frequency = 2.0;       // Hz, trot

  // Environment dynamics
  Range friction{0.6, 2.0};
  double push_interval = 8.0;
  Range push_velocity{-0.5, 0.5};
  // Robot kinematics and dynamics
  Range payload{0.0, 3.0};
  Range com_offset{-0.2, 0.2};
  Range motor_strength{0.8, 1.2};
  // Observation noise (uniform half-widths)
  double joint_pos_noise = 0.01;
  double joint_vel_noise = 0.05;
  double lin_vel_noise = 0.05;
  double ang_vel_noise = 0.05;
  double gravity_noise = 0.02;
  double height_noise = 0.02;
  double accel_noise = 0.1;

  // Contact-violating events
  double slip_rate = 0.3;  // events/s at unit friction, scales as 1/friction
  Range slip_duration{0.1, 0.3};
  double slip_jump = 0.4;          // max |dv| per horizontal axis, m/s
  double slip_noise_factor = 3.0;  // IMU noise amplitude multiplier
  double flight_rate = 0.15;       // events/s
  Range flight_duration{0.1, 0.25};

  /// Throws ConfigError on an inverted range or non-positive rate/duration.
  void validate() const;

  /// Same config with every noise source switched off.
  SimConfig noiseless() const;
};

}  // namespace agility::sim
