#include <doctest.h>

#include <cmath>
#include <sstream>

#include "agility/error.hpp"
#include "agility/estimator/training.hpp"
#include "agility/random.hpp"
#include "agility/sim/generator.hpp"
#include "ekf_oracle.hpp"

using namespace agility;
using namespace agility::ekf;
using estimator::VelocityEstimate;

TEST_CASE("predict: rotation couples the axes through omega x v") {
  EkfConfig cfg;
  cfg.dt = 0.1;
  FilterState s;
  s.v = {1, 0, 0};
  const auto p = predict(s, {0, 0, 0}, {0, 0, 1}, cfg);
  CHECK(std::abs(p.v[0] - 1.0) <= 1e-12);
  CHECK(std::abs(p.v[1] + 0.1) <= 1e-12);
  CHECK(std::abs(p.v[2]) <= 1e-12);
}

TEST_CASE("predict: no input leaves v and adds F to P") {
  EkfConfig cfg;
  FilterState s;
  s.v = {0.3, -0.2, 0.1};
  s.P = {0.1, 0.1, 0.1};
  const auto p = predict(s, {0, 0, 0}, {0, 0, 0}, cfg);
  CHECK(p.v == s.v);
  for (int i = 0; i < 3; ++i) {
    CHECK(p.P[i] == s.P[i] + cfg.process_noise[i]);
    CHECK(std::abs(p.P[i] - 0.101) <= 1e-12);
  }
}

TEST_CASE("predict: non-finite input throws") {
  CHECK_THROWS_AS(predict({}, {std::nan(""), 0, 0}, {0, 0, 0}, {}), NumericError);
}

TEST_CASE("update: huge sigma ignores the measurement") {
  FilterState s;
  s.v = {1, 2, 3};
  s.P = {0.1, 0.1, 0.1};
  const auto r = update(s, {{5, 5, 5}, {1e12, 1e12, 1e12}});
  for (int i = 0; i < 3; ++i) {
    CHECK(r.gain[i] < 1e-12);
    CHECK(std::abs(r.state.v[i] - s.v[i]) <= 1e-10);
  }
}

TEST_CASE("update: floor sigma trusts the measurement") {
  FilterState s;
  s.v = {1, 2, 3};
  s.P = {1, 1, 1};
  const auto r = update(s, {{5, -5, 0}, {estimator::kSigmaFloor, estimator::kSigmaFloor, 0.0}});
  for (int i = 0; i < 3; ++i) CHECK(r.gain[i] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.state.v[0] == doctest::Approx(5.0).epsilon(1e-5));
  CHECK(r.state.v[1] == doctest::Approx(-5.0).epsilon(1e-5));
  // A zero variance is clamped to the floor, not divided by.
  CHECK(std::isfinite(r.state.P[2]));
  CHECK(r.state.P[2] > 0.0);
}

TEST_CASE("update: equal P and sigma split the difference") {
  FilterState s;
  s.v = {1.0, 1.0, 1.0};
  s.P = {0.101, 0.101, 0.101};
  const auto r = update(s, {{2.0, 2.0, 2.0}, {0.101, 0.101, 0.101}});
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(r.gain[i] - 0.5) <= 1e-12);
    CHECK(std::abs(r.state.v[i] - 1.5) <= 1e-12);
    CHECK(std::abs(r.state.P[i] - 0.0505) <= 1e-12);
  }
}

TEST_CASE("update: fixed point and monotone trust") {
  Rng rng = fork(1, 0);
  for (int trial = 0; trial < 20; ++trial) {
    FilterState s;
    for (int i = 0; i < 3; ++i) {
      s.v[i] = normal(rng);
      s.P[i] = uniform(rng, 0.01, 1.0);
    }
    const auto same = update(s, {s.v, {0.3, 0.3, 0.3}});
    CHECK(same.state.v == s.v);
    for (int i = 0; i < 3; ++i) CHECK(same.state.P[i] < s.P[i]);

    const sim::Vec3 z{normal(rng), normal(rng), normal(rng)};
    double prev = INFINITY;
    for (double sigma = 1e-6; sigma < 1e6; sigma *= 1.5) {
      const auto r = update(s, {z, {sigma, sigma, sigma}});
      double d = 0;
      for (int i = 0; i < 3; ++i) d += (r.state.v[i] - s.v[i]) * (r.state.v[i] - s.v[i]);
      d = std::sqrt(d);
      CHECK(d < prev);
      prev = d;
    }
  }
}

TEST_CASE("run_filter: three steps match the long-double oracle to 1e-12") {
  const auto c = agility::testing::three_step_case();
  const auto steps = run_filter(c.frames, c.meas, c.cfg);
  const auto oracle = agility::testing::oracle_filter(c.frames, c.meas, c.cfg);
  REQUIRE(steps.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(steps[k].v_fused[i] - static_cast<double>(oracle[k].v[i])) <= 1e-12);
      CHECK(std::abs(steps[k].P[i] - static_cast<double>(oracle[k].P[i])) <= 1e-12);
    }
  }
}

TEST_CASE("run_filter: P stays positive over long runs") {
  const auto traj = sim::generate_trajectory(2, 0, sim::SimConfig{});
  Rng rng = fork(2, 1);
  std::vector<VelocityEstimate> meas;
  for (const auto& f : traj.frames) {
    const double s = std::exp(uniform(rng, -14, 5));
    meas.push_back({f.v_gt, {s, s, s}});
  }
  for (const auto& st : run_filter(traj.frames, meas, {})) {
    for (double p : st.P) CHECK(p > 0.0);
  }
}

TEST_CASE("run_filter: oracle measurements beat dead reckoning under IMU noise") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    sim::Dataset ds{sim::generate_trajectory(seed, 0, sim::SimConfig{})};
    const auto fused = estimator::eval_rmse(estimator::oracle_source(), ds, true, 0);
    // Dead reckoning: prediction only, from the true initial velocity.
    const auto& fr = ds[0].frames;
    sim::Vec3 v = fr[0].v_gt;
    double sse = 0;
    for (std::size_t k = 1; k < fr.size(); ++k) {
      v = sim::propagate_velocity(v, fr[k].a_imu, fr[k].omega_imu, ds[0].dt);
      for (int i = 0; i < 3; ++i) sse += (v[i] - fr[k].v_gt[i]) * (v[i] - fr[k].v_gt[i]);
    }
    const double dead = std::sqrt(sse / (3.0 * static_cast<double>(fr.size() - 1)));
    CHECK(fused.total < dead);
    CHECK(fused.total < 0.01);
  }
}

TEST_CASE("run_filter: a stationary robot settles near zero") {
  sim::SimConfig c;
  c.duration = 4.0;
  c.forward_speed = c.lateral_speed = c.yaw_rate = c.push_velocity = {0.0, 0.0};
  c.bounce_amplitude = c.attitude_amplitude = 0.0;
  c.slip_rate = c.flight_rate = 0.0;
  const auto traj = sim::generate_trajectory(3, 0, c);
  Rng rng = fork(3, 2);
  const double half = c.lin_vel_noise;  // uniform measurement noise, variance half^2 / 3
  std::vector<VelocityEstimate> meas;
  for (std::size_t k = 0; k < traj.frames.size(); ++k) {
    VelocityEstimate m;
    for (int i = 0; i < 3; ++i) {
      m.v_net[i] = uniform(rng, -half, half);
      m.sigma[i] = half * half / 3.0;
    }
    meas.push_back(m);
  }
  const auto steps = run_filter(traj.frames, meas, {});
  for (std::size_t k = 100; k < steps.size(); ++k) {
    for (double x : steps[k].v_fused) CHECK(std::abs(x) < 0.05);
  }
}

TEST_CASE("run_filter: size mismatch, time gaps and bad config throw") {
  const auto c = agility::testing::three_step_case();
  auto short_meas = c.meas;
  short_meas.pop_back();
  CHECK_THROWS_AS(run_filter(c.frames, short_meas, c.cfg), DimensionError);
  auto gap = c.frames;
  gap[2].t += 0.01;
  CHECK_THROWS_AS(run_filter(gap, c.meas, c.cfg), Error);
  EkfConfig bad = c.cfg;
  bad.process_noise[1] = 0.0;
  CHECK_THROWS_AS(run_filter(c.frames, c.meas, bad), ConfigError);
}

TEST_CASE("write_filter_csv: header and one row per step") {
  const auto c = agility::testing::three_step_case();
  std::ostringstream out;
  write_filter_csv(run_filter(c.frames, c.meas, c.cfg), out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("t,v_gt_x", 0) == 0);
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
}
