#include <doctest.h>

#include <cmath>

#include "agility/error.hpp"
#include "agility/estimator/loss.hpp"
#include "agility/estimator/training.hpp"
#include "agility/sim/generator.hpp"
#include "grad_suite.hpp"

using namespace agility;
using namespace agility::estimator;

namespace {

sim::SimConfig small_sim(int episodes, double duration) {
  sim::SimConfig c;
  c.episodes = episodes;
  c.duration = duration;
  return c;
}

EstimatorConfig small_net(Architecture arch, std::size_t window) {
  EstimatorConfig c;
  c.arch = arch;
  c.window = window;
  c.channels = 8;
  c.blocks = 1;
  c.mlp_hidden = 16;
  c.epochs = 1;
  c.samples_per_epoch = 256;
  return c;
}

}  // namespace

TEST_CASE("huber: quadratic branch, linear branch and the knee") {
  CHECK(huber({0, 0, 0}, {0.1, 0, 0}, 1.0) == doctest::Approx(0.005).epsilon(1e-14));
  CHECK(huber({0, 0, 0}, {2.0, 0, 0}, 1.0) == 1.5);
  const double d = 0.7;
  const double below = 0.5 * d * d;
  CHECK(huber({0, 0, 0}, {d, 0, 0}, d) == doctest::Approx(below).epsilon(1e-15));
  CHECK(huber({0, 0, 0}, {d + 1e-9, 0, 0}, d) == doctest::Approx(below).epsilon(1e-8));
  CHECK_THROWS_AS(huber({0, 0, 0}, {1, 0, 0}, 0.0), ConfigError);
}

TEST_CASE("huber_gaussian_loss: zero error at unit variance is zero") {
  CHECK(huber_gaussian_loss({1, 2, 3}, {{1, 2, 3}, {1, 1, 1}}, 0.5, 0.1) == 0.0);
}

TEST_CASE("huber_gaussian_loss: minimized over sigma at e^2") {
  for (double e : {0.05, 0.3, 1.7}) {
    double best = INFINITY, arg = 0;
    for (int i = 0; i <= 20000; ++i) {
      const double sigma = std::pow(10.0, -4.0 + 6.0 * i / 20000.0);
      const double l = huber_gaussian_loss({0, 0, 0}, {{e, 0, 0}, {sigma, 1, 1}}, 0.5, 0.1);
      if (l < best) {
        best = l;
        arg = sigma;
      }
    }
    CHECK(arg == doctest::Approx(e * e).epsilon(2e-3));
  }
}

TEST_CASE("huber_gaussian_loss: bounded below by the floor term") {
  const double weight = 0.1;
  const double bound = weight * 3.0 * 0.5 * std::log(kSigmaFloor);
  Rng rng = fork(1, 0);
  for (int i = 0; i < 1000; ++i) {
    VelocityEstimate est{{normal(rng), normal(rng), normal(rng)},
                         {std::exp(uniform(rng, -20, 3)), std::exp(uniform(rng, -20, 3)),
                          std::exp(uniform(rng, -20, 3))}};
    CHECK(huber_gaussian_loss({0, 0, 0}, est, 0.5, weight) >= bound);
  }
}

TEST_CASE("huber_gaussian_grad: finite differences over 20 seeds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CHECK(agility::testing::check_huber_gaussian(seed, 1e-5).passed);
  }
  const auto g = huber_gaussian_grad({0, 0, 0}, {0.2, 0, 0}, {0.3, 0, 0}, 0.5, 0.1);
  VelocityEstimate est{{0.2, 0, 0},
                       {sigma_from_raw(0.3), sigma_from_raw(0.0), sigma_from_raw(0.0)}};
  CHECK(g.loss == doctest::Approx(huber_gaussian_loss({0, 0, 0}, est, 0.5, 0.1)).epsilon(1e-14));
}

TEST_CASE("predict_velocity: zero-weight net predicts zero with softplus(0) variance") {
  Rng rng = fork(2, 0);
  const VelocityNet net(small_net(Architecture::resnet1d, 10), rng);
  const auto traj = sim::generate_trajectory(1, 0, small_sim(1, 2.0));
  const auto est = predict_velocity(net, std::span(traj.frames).subspan(20, 10));
  for (int i = 0; i < 3; ++i) {
    CHECK(est.v_net[i] == 0.0);
    CHECK(est.sigma[i] == std::log(2.0) + kSigmaFloor);
  }
  CHECK_THROWS_AS(predict_velocity(net, std::span(traj.frames).subspan(20, 9)), DimensionError);
}

TEST_CASE("predict_velocity: identical windows give identical estimates") {
  auto cfg = small_net(Architecture::resnet1d, 10);
  const auto ds = sim::generate_dataset(3, small_sim(3, 3.0));
  const auto split = split_by_episode(ds);
  const auto net = train_estimator(cfg, split.train, {}).net;
  const auto a = predict_velocity(net, std::span(ds[0].frames).subspan(30, 10));
  const auto b = predict_velocity(net, std::span(ds[0].frames).subspan(30, 10));
  CHECK(a.v_net == b.v_net);
  CHECK(a.sigma == b.sigma);
}

TEST_CASE("train_estimator: zero epochs returns the untrained net") {
  auto cfg = small_net(Architecture::mlp, 1);
  cfg.epochs = 0;
  const auto ds = sim::generate_dataset(4, small_sim(3, 3.0));
  const auto split = split_by_episode(ds, 0.67);
  const auto r = train_estimator(cfg, split.train, split.val);
  CHECK(r.steps == 0);
  const auto zero = eval_rmse(
      [](const sim::Trajectory& t, std::size_t first) {
        return std::vector<VelocityEstimate>(t.frames.size() - first);
      },
      split.val, false, cfg.first_frame);
  CHECK(r.val.total == doctest::Approx(zero.total).epsilon(1e-14));
}

TEST_CASE("train_estimator: same seed gives identical parameters") {
  for (auto arch : {Architecture::mlp, Architecture::resnet1d}) {
    auto cfg = small_net(arch, arch == Architecture::mlp ? 1 : 10);
    const auto ds = sim::generate_dataset(5, small_sim(3, 3.0));
    auto a = train_estimator(cfg, ds, {}).net;
    auto b = train_estimator(cfg, ds, {}).net;
    const auto pa = a.params();
    const auto pb = b.params();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(*pa[i].value == *pb[i].value);
    CHECK(a.fixed_sigma == b.fixed_sigma);
  }
}

TEST_CASE("train_estimator: a stationary robot is estimated near zero") {
  sim::SimConfig c = small_sim(6, 4.0);
  c.forward_speed = c.lateral_speed = c.yaw_rate = c.push_velocity = {0.0, 0.0};
  c.bounce_amplitude = c.attitude_amplitude = 0.0;
  c.slip_rate = c.flight_rate = 0.0;
  const auto ds = sim::generate_dataset(6, c);
  const auto split = split_by_episode(ds, 0.67);
  auto cfg = small_net(Architecture::resnet1d, 10);
  cfg.epochs = 2;
  const auto net = train_estimator(cfg, split.train, split.val).net;
  for (const auto& traj : split.val) {
    for (const auto& e : predict_trajectory(net, traj, cfg.first_frame)) {
      for (double v : e.v_net) CHECK(std::abs(v) < 0.05);
    }
  }
}

TEST_CASE("eval_rmse: oracle measurements score zero, fused below 0.01") {
  const auto ds = sim::generate_dataset(7, small_sim(2, 4.0));
  CHECK(eval_rmse(oracle_source(), ds, false, 9).total == 0.0);
  CHECK(eval_rmse(oracle_source(), ds, true, 9).total < 0.01);
  CHECK_THROWS_AS(eval_rmse(oracle_source(), {}, false, 9), Error);
}

TEST_CASE("split_by_episode: whole episodes on each side") {
  const auto ds = sim::generate_dataset(8, small_sim(10, 1.0));
  const auto s = split_by_episode(ds);
  CHECK(s.train.size() == 8);
  CHECK(s.val.size() == 2);
  CHECK(s.val.front().episode == 8);
}

TEST_CASE("estimator config: invalid settings are rejected") {
  EstimatorConfig c;
  c.window = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = EstimatorConfig{};
  c.huber_delta = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = EstimatorConfig{};
  c.first_frame = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(architecture_from_string("transformer"), ConfigError);
}

TEST_CASE("normalizer: fitted features have zero mean") {
  const auto ds = sim::generate_dataset(9, small_sim(2, 2.0));
  const auto norm = Normalizer::fit(ds);
  std::vector<double> sum(kFeatureDim, 0.0);
  std::size_t n = 0;
  for (const auto& t : ds) {
    const auto x = norm.apply(t);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t c = 0; c < kFeatureDim; ++c) sum[c] += x.at(r, c);
    }
    n += x.rows();
  }
  for (double s : sum) CHECK(std::abs(s / static_cast<double>(n)) < 1e-9);
}
