#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace agility::sim {

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec3 operator-(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec3 operator*(double s, const Vec3& a) {
  return {s * a[0], s * a[1], s * a[2]};
}
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

inline constexpr std::size_t kLegs = 4;
inline constexpr std::size_t kJoints = 12;

enum class Event { nominal, slip, flight };

std::string to_string(Event e);
Event event_from_string(const std::string& s);

/// One control-step sample of proprioception plus its ground truth.
///
/// `a_imu` is motion acceleration in the body frame (gravity already removed
/// using the true attitude, plus sensor noise); `gravity` is the noisy
/// projected gravity direction the robot observes.
struct ProprioFrame {
  std::uint32_t episode = 0;
  double t = 0.0;         // s
  Vec3 v_gt{};            // m/s, body frame
  Vec3 a_imu{};           // m/s^2
  Vec3 omega_imu{};       // rad/s
  Vec3 gravity{};         // unit vector, body frame
  std::array<double, kJoints> joint_pos{};  // rad
  std::array<double, kJoints> joint_vel{};  // rad/s
  std::array<bool, kLegs> contact{};
  Event event = Event::nominal;
  double x = 0.0;         // forward progress along the track, m

  bool operator==(const ProprioFrame&) const = default;
};

struct Trajectory {
  std::uint32_t episode = 0;
  double dt = 0.02;
  std::vector<ProprioFrame> frames;

  bool operator==(const Trajectory&) const = default;
};

using Dataset = std::vector<Trajectory>;

}  // namespace agility::sim
