#include "agility/sim/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "agility/error.hpp"
#include "agility/random.hpp"

namespace agility::sim {

namespace {

constexpr double kGravity = 9.81;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Trot: diagonal pairs FL/RR and FR/RL move together.
constexpr std::array<double, kLegs> kPhaseOffset{0.0, 0.5, 0.5, 0.0};
constexpr std::array<double, kLegs> kHipSignX{1.0, 1.0, -1.0, -1.0};
constexpr std::array<double, kLegs> kHipSignY{1.0, -1.0, 1.0, -1.0};

struct Interval {
  double start, end;
  Event kind;
};

std::vector<Interval> schedule_events(Rng& rng, const SimConfig& cfg,
                                      double friction) {
  std::vector<Interval> events;
  const double slip_rate = cfg.slip_rate / friction;
  double t = 0.5;
  while (true) {
    const double gap_slip =
        slip_rate > 0 ? std::exponential_distribution<double>(slip_rate)(rng)
                      : std::numeric_limits<double>::infinity();
    const double gap_flight =
        cfg.flight_rate > 0
            ? std::exponential_distribution<double>(cfg.flight_rate)(rng)
            : std::numeric_limits<double>::infinity();
    const bool slip = gap_slip <= gap_flight;
    const double start = t + std::min(gap_slip, gap_flight);
    if (!std::isfinite(start) || start >= cfg.duration) break;
    const Range dur = slip ? cfg.slip_duration : cfg.flight_duration;
    const double end = start + uniform(rng, dur.lo, dur.hi);
    events.push_back({start, end, slip ? Event::slip : Event::flight});
    t = end + 0.2;
  }
  return events;
}

double draw(Rng& rng, const Range& r) {
  return r.lo == r.hi ? r.lo : uniform(rng, r.lo, r.hi);
}

double jitter(Rng& rng, double half_width) {
  return half_width > 0 ? uniform(rng, -half_width, half_width) : 0.0;
}

struct LegState {
  Vec3 p{};
  Vec3 lift_off{};
  bool stance = false;
  bool initialized = false;
};

}  // namespace

std::string to_string(Event e) {
  switch (e) {
    case Event::nominal: return "nominal";
    case Event::slip: return "slip";
    case Event::flight: return "flight";
  }
  return "nominal";
}

Event event_from_string(const std::string& s) {
  if (s == "nominal") return Event::nominal;
  if (s == "slip") return Event::slip;
  if (s == "flight") return Event::flight;
  throw Error("unknown event '" + s + "'");
}

void SimConfig::validate() const {
  auto check_range = [](const Range& r, const char* name) {
    if (!(r.lo <= r.hi)) {
      throw ConfigError(std::string("sim.") + name + ": min exceeds max");
    }
  };
  check_range(forward_speed, "forward_speed");
  check_range(lateral_speed, "lateral_speed");
  check_range(yaw_rate, "yaw_rate");
  check_range(friction, "friction");
  check_range(push_velocity, "push_velocity");
  check_range(payload, "payload");
  check_range(com_offset, "com_offset");
  check_range(motor_strength, "motor_strength");
  check_range(slip_duration, "slip_duration");
  check_range(flight_duration, "flight_duration");
  if (!(dt > 0) || !(duration > 0) || episodes < 1) {
    throw ConfigError("sim: dt, duration and episodes must be positive");
  }
  if (friction.lo <= 0 || motor_strength.lo <= 0) {
    throw ConfigError("sim: friction and motor strength must be positive");
  }
  if (!(push_interval > 0) || !(velocity_time_constant > 0) ||
      !(command_hold > 0) || !(gait_frequency > 0)) {
    throw ConfigError("sim: intervals and frequencies must be positive");
  }
  for (double n : {joint_pos_noise, joint_vel_noise, lin_vel_noise,
                   ang_vel_noise, gravity_noise, height_noise, accel_noise,
                   slip_rate, flight_rate, slip_jump}) {
    if (n < 0) throw ConfigError("sim: noise amplitudes and rates must be >= 0");
  }
  if (slip_noise_factor < 1) {
    throw ConfigError("sim: slip_noise_factor must be >= 1");
  }
}

SimConfig SimConfig::noiseless() const {
  SimConfig c = *this;
  c.joint_pos_noise = c.joint_vel_noise = c.lin_vel_noise = 0;
  c.ang_vel_noise = c.gravity_noise = c.height_noise = c.accel_noise = 0;
  return c;
}

std::array<double, 3> leg_ik(const Vec3& p, const LegGeometry& geo) {
  const double l1 = geo.thigh;
  const double l2 = geo.calf;
  const double q0 = std::atan2(p[1], -p[2]);
  double depth = std::hypot(p[1], p[2]);
  double fwd = p[0];
  const double reach = std::hypot(fwd, depth);
  const double max_reach = 0.98 * (l1 + l2);
  if (reach > max_reach) {
    fwd *= max_reach / reach;
    depth *= max_reach / reach;
  }
  const double r2 = fwd * fwd + depth * depth;
  const double c2 =
      std::clamp((r2 - l1 * l1 - l2 * l2) / (2 * l1 * l2), -1.0, 1.0);
  const double q2 = -std::acos(c2);
  const double alpha = std::atan2(-fwd, depth);
  const double q1 =
      alpha - std::atan2(l2 * std::sin(q2), l1 + l2 * std::cos(q2));
  return {q0, q1, q2};
}

Vec3 leg_fk(const std::array<double, 3>& q, const LegGeometry& geo) {
  const double xp = -geo.thigh * std::sin(q[1]) - geo.calf * std::sin(q[1] + q[2]);
  const double zp = -geo.thigh * std::cos(q[1]) - geo.calf * std::cos(q[1] + q[2]);
  return {xp, -zp * std::sin(q[0]), zp * std::cos(q[0])};
}

Vec3 propagate_velocity(const Vec3& v, const Vec3& accel, const Vec3& omega,
                        double dt) {
  const Vec3 coriolis = cross(omega, v);
  return {v[0] + (accel[0] - coriolis[0]) * dt,
          v[1] + (accel[1] - coriolis[1]) * dt,
          v[2] + (accel[2] - coriolis[2]) * dt};
}

Trajectory generate_trajectory(std::uint64_t seed, std::uint32_t episode,
                               const SimConfig& cfg) {
  cfg.validate();
  Rng rng = fork(seed, episode);
  Rng noise_rng = fork(seed ^ 0x9e3779b97f4a7c15ULL, episode);
  const LegGeometry geo;

  const double friction = draw(rng, cfg.friction);
  const double payload = draw(rng, cfg.payload);
  const double com_offset = draw(rng, cfg.com_offset);
  const double strength = draw(rng, cfg.motor_strength);
  const double body_height = geo.nominal_height - 0.01 * payload / strength;
  const double swing_height = 0.08 * strength;
  const double roll_phase = uniform(rng, 0, kTwoPi);
  const double pitch_phase = uniform(rng, 0, kTwoPi);
  const double gait_phase = uniform(rng, 0, 1);
  const auto events = schedule_events(rng, cfg, friction);

  const double dt = cfg.dt;
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration / dt));
  const double stance_time = 0.5 / cfg.gait_frequency;
  const double bounce_w = kTwoPi * 2.0 * cfg.gait_frequency;
  const double sway_w = kTwoPi * cfg.gait_frequency;

  Trajectory traj;
  traj.episode = episode;
  traj.dt = dt;
  traj.frames.reserve(n);

  Vec3 cmd{draw(rng, cfg.forward_speed), draw(rng, cfg.lateral_speed), 0.0};
  double cmd_yaw = draw(rng, cfg.yaw_rate);
  double next_command = cfg.command_hold;
  double next_push = cfg.push_interval;
  Vec3 v{cmd[0], cmd[1], cfg.bounce_amplitude * bounce_w *
                             std::cos(bounce_w * 0.0)};
  double yaw = cmd_yaw;
  Vec3 slip_offset{};
  std::size_t event_idx = 0;
  Event prev_event = Event::nominal;
  double flight_start = 0.0;
  double flight_len = 0.0;
  double x = 0.0;
  std::array<LegState, kLegs> legs{};

  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    while (event_idx < events.size() && events[event_idx].end <= t) ++event_idx;
    Event event = Event::nominal;
    if (event_idx < events.size() && events[event_idx].start <= t) {
      event = events[event_idx].kind;
    }

    const Vec3 v_prev = v;
    if (i > 0) {
      if (t >= next_command - 1e-9) {
        cmd = {draw(rng, cfg.forward_speed), draw(rng, cfg.lateral_speed), 0.0};
        cmd_yaw = draw(rng, cfg.yaw_rate);
        next_command += cfg.command_hold;
      }
      const double blend = dt / cfg.velocity_time_constant;
      if (event != Event::flight) {
        v[0] += (cmd[0] - v[0]) * blend;
        v[1] += (cmd[1] - v[1]) * blend;
        v[2] = cfg.bounce_amplitude * bounce_w * std::cos(bounce_w * t);
      }
      yaw += (cmd_yaw - yaw) * blend;
      if (t >= next_push - 1e-9) {
        v[0] += draw(rng, cfg.push_velocity);
        v[1] += draw(rng, cfg.push_velocity);
        next_push += cfg.push_interval;
      }
      if (event == Event::slip && prev_event != Event::slip) {
        slip_offset = {uniform(rng, -cfg.slip_jump, cfg.slip_jump),
                       uniform(rng, -cfg.slip_jump, cfg.slip_jump), 0.0};
        v = v + slip_offset;
      }
      if (event == Event::flight) {
        if (prev_event != Event::flight) {
          flight_start = t;
          flight_len = events[event_idx].end - events[event_idx].start;
        }
        v[2] = kGravity * (0.5 * flight_len - (t - flight_start));
      }
    }
    if (event != Event::slip) slip_offset = {};
    prev_event = event;

    const double roll = cfg.attitude_amplitude * std::sin(sway_w * t + roll_phase);
    const double pitch =
        cfg.attitude_amplitude * std::sin(0.5 * sway_w * t + pitch_phase);
    const Vec3 omega{
        cfg.attitude_amplitude * sway_w * std::cos(sway_w * t + roll_phase),
        cfg.attitude_amplitude * 0.5 * sway_w *
            std::cos(0.5 * sway_w * t + pitch_phase),
        yaw};
    const Vec3 gravity_b{std::sin(pitch), -std::sin(roll) * std::cos(pitch),
                         -std::cos(roll) * std::cos(pitch)};

    // Gravity-compensated accelerometer, the exact inverse of
    // propagate_velocity before noise.
    Vec3 a_motion{};
    if (i > 0) {
      const Vec3 c = cross(omega, v_prev);
      for (int k = 0; k < 3; ++k) a_motion[k] = (v[k] - v_prev[k]) / dt + c[k];
    } else {
      a_motion = cross(omega, v);
    }

    ProprioFrame f;
    f.episode = episode;
    f.t = t;
    f.v_gt = v;
    f.event = event;
    if (i > 0) x += v_prev[0] * dt;
    f.x = x;
    const double accel_noise =
        cfg.accel_noise * (event == Event::slip ? cfg.slip_noise_factor : 1.0);
    for (int k = 0; k < 3; ++k) {
      f.a_imu[k] = a_motion[k] + jitter(noise_rng, accel_noise);
      f.omega_imu[k] = omega[k] + jitter(noise_rng, cfg.ang_vel_noise);
      f.gravity[k] = gravity_b[k] + jitter(noise_rng, cfg.gravity_noise);
    }

    // Leg kinematics. Stance feet are fixed in the world, so relative to the
    // hip they move at -(v + w x r). During a slip the feet slide and the
    // joints keep reporting the pre-slip body velocity.
    const Vec3 v_kin = v - slip_offset;
    for (std::size_t leg = 0; leg < kLegs; ++leg) {
      LegState& s = legs[leg];
      const Vec3 hip{kHipSignX[leg] * geo.hip_x, kHipSignY[leg] * geo.hip_y, 0.0};
      // A shifted centre of mass moves the support polygon with it, so feet
      // land displaced along x; the hips stay rigidly attached to the IMU.
      const Vec3 touchdown{v_kin[0] * 0.5 * stance_time + 0.5 * com_offset,
                           v_kin[1] * 0.5 * stance_time, -body_height};
      const double phase =
          std::fmod(cfg.gait_frequency * t + kPhaseOffset[leg] + gait_phase,
                    1.0);
      const bool stance_phase = phase < 0.5;
      Vec3 pdot{};
      if (event == Event::flight) {
        const Vec3 tuck{0.0, 0.0, -0.8 * body_height};
        pdot = (1.0 / 0.05) * (tuck - s.p);
        s.stance = false;
        s.lift_off = s.p;
        f.contact[leg] = false;
      } else if (stance_phase) {
        if (!s.initialized || !s.stance) {
          s.p = {touchdown[0] + (s.initialized ? 0.0 : -v_kin[0] * phase *
                                                           stance_time * 2.0),
                 touchdown[1], touchdown[2]};
        }
        s.stance = true;
        pdot = Vec3{} - v_kin - cross(omega, hip + s.p);
        f.contact[leg] = true;
      } else {
        if (!s.initialized || s.stance) s.lift_off = s.p;
        s.stance = false;
        const double sw = (phase - 0.5) / 0.5;
        const double swing_time = stance_time;
        const double ease = sw - std::sin(kTwoPi * sw) / kTwoPi;
        const double ease_rate = (1.0 - std::cos(kTwoPi * sw)) / swing_time;
        const Vec3 travel = touchdown - s.lift_off;
        s.p = s.lift_off + ease * travel;
        s.p[2] += swing_height * 0.5 * (1.0 - std::cos(kTwoPi * sw));
        pdot = ease_rate * travel;
        pdot[2] += swing_height * std::numbers::pi * std::sin(kTwoPi * sw) /
                   swing_time;
        f.contact[leg] = false;
      }
      s.initialized = true;

      const auto q = leg_ik(s.p, geo);
      constexpr double eps = 1e-5;
      const auto q_plus = leg_ik(s.p + eps * pdot, geo);
      const auto q_minus = leg_ik(s.p - eps * pdot, geo);
      for (std::size_t j = 0; j < 3; ++j) {
        f.joint_pos[3 * leg + j] = q[j] + jitter(noise_rng, cfg.joint_pos_noise);
        f.joint_vel[3 * leg + j] = (q_plus[j] - q_minus[j]) / (2 * eps) +
                                   jitter(noise_rng, cfg.joint_vel_noise);
      }
      if (event == Event::flight || stance_phase) s.p = s.p + dt * pdot;
    }
    traj.frames.push_back(f);
  }
  return traj;
}

Dataset generate_dataset(std::uint64_t seed, const SimConfig& cfg) {
  cfg.validate();
  Dataset ds;
  ds.reserve(static_cast<std::size_t>(cfg.episodes));
  for (int e = 0; e < cfg.episodes; ++e) {
    ds.push_back(generate_trajectory(seed, static_cast<std::uint32_t>(e), cfg));
  }
  return ds;
}

}  // namespace agility::sim
