#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "agility/error.hpp"
#include "agility/experiments/blindzone.hpp"
#include "agility/nn/adam.hpp"
#include "agility/sim/generator.hpp"
#include "agility/ssm/rope.hpp"
#include "agility/ssm/ssm.hpp"
#include "agility/ssm/terrain_memory.hpp"
#include "grad_suite.hpp"

using namespace agility;
using namespace agility::ssm;
using agility::nn::Tensor;
using agility::testing::random_tensor;

namespace {

// Layer whose decay is exactly zero and whose B and C are identities.
SsmLayer memoryless_identity(std::size_t d) {
  auto l = SsmLayer::make(d, d, d);
  l.delta.bias.fill(1e3);  // softplus(1e3) = 1e3, exp(-1e3) = 0
  for (std::size_t i = 0; i < d; ++i) {
    l.w_in.at(i, i) = 1.0;
    l.w_out.at(i, i) = 1.0;
  }
  return l;  // gate weights and bias 0: g = 2 sigmoid(0) = 1
}

// Scalar layer with A = exp(-softplus(0)) = 0.5, B = (1 - A) * w_in, C = 1.
SsmLayer scalar_half(double w_in) {
  auto l = SsmLayer::make(1, 1, 1);
  l.w_in[0] = w_in;
  l.w_out[0] = 1.0;
  return l;
}

std::vector<Tensor> random_sequence(Rng& rng, std::size_t steps, std::size_t dim) {
  std::vector<Tensor> xs;
  for (std::size_t t = 0; t < steps; ++t) xs.push_back(random_tensor(rng, {dim}));
  return xs;
}

SsmLayer random_layer(std::uint64_t seed, std::size_t in, std::size_t ns, std::size_t out) {
  Rng rng = fork(seed, 99);
  auto l = SsmLayer::make(in, ns, out);
  l.init(rng);
  agility::testing::random_layer(l.delta, rng);
  agility::testing::random_layer(l.gate, rng);
  return l;
}

}  // namespace

TEST_CASE("ssm_step: A=0, B=I, C=I passes the input through") {
  auto l = memoryless_identity(3);
  const auto m = l.matrices(Tensor::vector({0.1, 0.2, 0.3}));
  for (std::size_t n = 0; n < 3; ++n) CHECK(m.a[n] == 0.0);
  Rng rng = fork(1, 0);
  SsmState s = l.initial_state();
  for (const auto& x : random_sequence(rng, 20, 3)) {
    auto r = ssm_step(l, s, x);
    for (std::size_t i = 0; i < 3; ++i) CHECK(r.y[i] == x[i]);
    s = r.state;
  }
}

TEST_CASE("ssm_step: geometric decay from h0 = 1") {
  auto l = scalar_half(1.0);
  CHECK(l.matrices(Tensor::vector({0.0})).a[0] == 0.5);
  SsmState s{Tensor::vector({1.0}), 0};
  double expect = 1.0;
  for (int t = 0; t < 6; ++t) {
    auto r = ssm_step(l, s, Tensor::vector({0.0}));
    expect *= 0.5;
    CHECK(r.y[0] == expect);
    s = r.state;
  }
}

TEST_CASE("ssm_step: impulse response with A=0.5, B=1, C=1") {
  auto l = scalar_half(2.0);
  CHECK(l.matrices(Tensor::vector({1.0})).b[0] == 1.0);
  SsmState s = l.initial_state();
  const double expect[] = {1.0, 0.5, 0.25};
  const double xs[] = {1.0, 0.0, 0.0};
  for (int t = 0; t < 3; ++t) {
    auto r = ssm_step(l, s, Tensor::vector({xs[t]}));
    CHECK(r.y[0] == expect[t]);
    s = r.state;
  }
  CHECK(s.step_index == 3);
}

TEST_CASE("linear_step: explicit matrices reproduce the impulse response") {
  StepMatrices m{Tensor::vector({0.5}), Tensor::matrix(1, 1, {1.0}), Tensor::matrix(1, 1, {1.0})};
  SsmState s{Tensor({1}), 0};
  std::vector<double> ys;
  for (double x : {1.0, 0.0, 0.0}) {
    auto r = linear_step(m, s, Tensor::vector({x}));
    ys.push_back(r.y[0]);
    s = r.state;
  }
  CHECK(ys == std::vector<double>{1.0, 0.5, 0.25});
  CHECK_THROWS_AS(linear_step(m, s, Tensor::vector({1.0, 2.0})), DimensionError);
}

TEST_CASE("ssm_step: the layer's matrices agree with linear_step") {
  auto l = random_layer(4, 3, 5, 2);
  Rng rng = fork(4, 1);
  SsmState s{random_tensor(rng, {5}), 0};
  const Tensor x = random_tensor(rng, {3});
  const auto a = ssm_step(l, s, x);
  const auto b = linear_step(l.matrices(x), s, x);
  for (std::size_t n = 0; n < 5; ++n) CHECK(a.state.h[n] == doctest::Approx(b.state.h[n]).epsilon(1e-13));
  for (std::size_t o = 0; o < 2; ++o) CHECK(a.y[o] == doctest::Approx(b.y[o]).epsilon(1e-13));
}

TEST_CASE("ssm_scan equals folding ssm_step, bit for bit") {
  for (std::size_t steps : {1u, 2u, 17u, 100u, 1000u}) {
    auto l = random_layer(steps, 4, 8, 3);
    Rng rng = fork(steps, 2);
    const auto xs = random_sequence(rng, steps, 4);
    SsmState s{random_tensor(rng, {8}), 5};
    const auto scan = ssm_scan(l, s, xs);
    REQUIRE(scan.ys.size() == steps);
    for (std::size_t t = 0; t < steps; ++t) {
      auto r = ssm_step(l, s, xs[t]);
      CHECK(r.y == scan.ys[t]);
      s = r.state;
    }
    CHECK(s.h == scan.state.h);
    CHECK(s.step_index == scan.state.step_index);
  }
}

TEST_CASE("ssm_scan: empty sequence and concatenation") {
  auto l = random_layer(8, 3, 4, 2);
  Rng rng = fork(8, 3);
  const SsmState s0{random_tensor(rng, {4}), 0};
  const auto empty = ssm_scan(l, s0, {});
  CHECK(empty.ys.empty());
  CHECK(empty.state.h == s0.h);
  CHECK(empty.state.step_index == 0);

  const auto a = random_sequence(rng, 13, 3);
  const auto b = random_sequence(rng, 21, 3);
  std::vector<Tensor> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  const auto whole = ssm_scan(l, s0, ab);
  const auto first = ssm_scan(l, s0, a);
  const auto second = ssm_scan(l, first.state, b);
  for (std::size_t t = 0; t < a.size(); ++t) CHECK(whole.ys[t] == first.ys[t]);
  for (std::size_t t = 0; t < b.size(); ++t) CHECK(whole.ys[a.size() + t] == second.ys[t]);
  CHECK(whole.state.h == second.state.h);
}

TEST_CASE("ssm: training path matches the streaming path") {
  auto l = random_layer(9, 3, 6, 2);
  Rng rng = fork(9, 4);
  const std::size_t steps = 12, batch = 3;
  const Tensor x = random_tensor(rng, {steps * batch, 3});
  const Tensor h0 = random_tensor(rng, {batch, 6});
  const Tensor y = scan_forward(l, x, batch, h0);
  for (std::size_t b = 0; b < batch; ++b) {
    SsmState s{Tensor({6}), 0};
    for (std::size_t n = 0; n < 6; ++n) s.h[n] = h0.at(b, n);
    for (std::size_t t = 0; t < steps; ++t) {
      Tensor xt({3});
      for (std::size_t i = 0; i < 3; ++i) xt[i] = x.at(t * batch + b, i);
      const auto r = ssm_step(l, s, xt);
      for (std::size_t o = 0; o < 2; ++o) CHECK(r.y[o] == y.at(t * batch + b, o));
      s = r.state;
    }
  }
}

TEST_CASE("ssm: decays lie in (0, 1) and the state stays bounded") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto l = random_layer(seed, 4, 8, 2);
    Rng rng = fork(seed, 5);
    const double m = 2.0;
    // bound = max(|h0|, M * max_n sum_i |W_in[i, n]|)
    double row_max = 0;
    for (std::size_t n = 0; n < 8; ++n) {
      double s = 0;
      for (std::size_t i = 0; i < 4; ++i) s += std::abs(l.w_in.at(i, n));
      row_max = std::max(row_max, s);
    }
    SsmState s{Tensor({8}), 0};
    for (std::size_t n = 0; n < 8; ++n) s.h[n] = uniform(rng, -1, 1);
    const double bound = std::max(1.0, m * row_max);
    double worst_first = 0, worst_last = 0;
    for (int t = 0; t < 10000; ++t) {
      Tensor x({4});
      for (std::size_t i = 0; i < 4; ++i) x[i] = uniform(rng, -m, m);
      if (t % 997 == 0) {
        const auto mats = l.matrices(x);
        for (std::size_t n = 0; n < 8; ++n) {
          CHECK(mats.a[n] > 0.0);
          CHECK(mats.a[n] < 1.0);
        }
      }
      s = ssm_step(l, s, x).state;
      const double h = nn::max_abs(s.h);
      REQUIRE(h <= bound + 1e-12);
      if (t < 1000) worst_first = std::max(worst_first, h);
      if (t >= 9000) worst_last = std::max(worst_last, h);
    }
    CHECK(worst_last <= bound);
    CHECK(std::isfinite(worst_first));
  }
}

TEST_CASE("ssm_step: wrong shapes throw") {
  auto l = SsmLayer::make(3, 4, 2);
  CHECK_THROWS_AS(ssm_step(l, l.initial_state(), Tensor({2})), DimensionError);
  CHECK_THROWS_AS(ssm_step(l, {Tensor({5}), 0}, Tensor({3})), DimensionError);
}

TEST_CASE("ssm_step: a non-finite state throws NumericError with the step") {
  auto l = scalar_half(1.0);
  SsmState s{Tensor::vector({std::numeric_limits<double>::infinity()}), 41};
  try {
    ssm_step(l, s, Tensor::vector({0.0}));
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.step() == 42);
  }
}

TEST_CASE("ssm_step: step time does not grow with step index") {
  auto l = random_layer(3, 64, 64, 64);
  Rng rng = fork(3, 6);
  const auto xs = random_sequence(rng, 64, 64);
  auto median_at = [&](std::size_t history) {
    SsmState s = l.initial_state();
    for (std::size_t i = 0; i < history; ++i) s = ssm_step(l, s, xs[i % 64]).state;
    std::vector<double> us;
    for (std::size_t i = 0; i < 1100; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      s = ssm_step(l, s, xs[i % 64]).state;
      const auto t1 = std::chrono::steady_clock::now();
      if (i >= 100) us.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
    }
    std::nth_element(us.begin(), us.begin() + us.size() / 2, us.end());
    return us[us.size() / 2];
  };
  median_at(10);  // warm caches
  CHECK(median_at(1000) <= 1.5 * median_at(10));
}

TEST_CASE("ssm: gradient check over 20 seeds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = agility::testing::check_ssm(seed, 1e-5);
    INFO("seed " << seed << " worst " << r.worst_target << " " << r.max_rel_error);
    CHECK(r.passed);
  }
}

TEST_CASE("rope: position 0 is the identity") {
  Rng rng = fork(1, 7);
  const Tensor x = random_tensor(rng, {8});
  CHECK(rope_encode(x, 0) == x);
}

TEST_CASE("rope: norm is preserved") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = fork(seed, 8);
    const Tensor x = random_tensor(rng, {16});
    const auto p = static_cast<std::int64_t>(uniform(rng, -5000, 5000));
    const double a = nn::l2_norm(x.values());
    const double b = nn::l2_norm(rope_encode(x, p).values());
    CHECK(std::abs(a - b) <= 1e-12 * a);
  }
}

TEST_CASE("rope: inner products depend only on the offset") {
  Rng rng = fork(2, 9);
  const Tensor q = random_tensor(rng, {8});
  const Tensor k = random_tensor(rng, {8});
  const double a = nn::dot(rope_encode(q, 5), rope_encode(k, 3));
  const double b = nn::dot(rope_encode(q, 7), rope_encode(k, 5));
  CHECK(std::abs(a - b) <= 1e-10);
  // Oracle: each pair (2i, 2i+1) contributes the 2-D inner product of q_i
  // rotated by the offset angle with k_i.
  double oracle = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double theta = 2.0 * std::pow(10000.0, -2.0 * static_cast<double>(i) / 8.0);
    const double c = std::cos(theta), s = std::sin(theta);
    const double q0 = q[2 * i] * c - q[2 * i + 1] * s;
    const double q1 = q[2 * i] * s + q[2 * i + 1] * c;
    oracle += q0 * k[2 * i] + q1 * k[2 * i + 1];
  }
  CHECK(a == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("rope: odd dimension throws; decode inverts encode") {
  CHECK_THROWS_AS(rope_encode(Tensor({3}), 1), DimensionError);
  Rng rng = fork(3, 10);
  const Tensor x = random_tensor(rng, {6});
  const Tensor back = rope_decode(rope_encode(x, 37), 37);
  for (std::size_t i = 0; i < 6; ++i) CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-13));
}

TEST_CASE("terrain_memory_head: zero readout predicts zero") {
  Rng rng = fork(4, 11);
  const Tensor ys = random_tensor(rng, {7, 5});
  const auto head = nn::make_linear(5, 3);
  CHECK(nn::max_abs(terrain_memory_head(ys, head)) == 0.0);
}

TEST_CASE("memory_inputs: layout and length checks") {
  sim::FeatureStream s;
  s.heights = Tensor::matrix(1, 2, {0.3, 0.0});
  s.sample_valid = Tensor::matrix(1, 2, {1.0, 0.0});
  s.truth = s.heights;
  s.frame_valid = {true};
  const Tensor x = memory_inputs(s, {0.9});
  REQUIRE(x.cols() == memory_input_dim(2));
  CHECK(x.at(0, 0) == 0.3);  // sample 0 is not rotated
  CHECK(x.at(0, 1) == 1.0);
  CHECK(x.at(0, 2) == 0.0);  // invalid sample: both channels zero
  CHECK(x.at(0, 3) == 0.0);
  CHECK(x.at(0, 4) == 1.0);
  CHECK(x.at(0, 5) == 0.9);
  CHECK_THROWS_AS(memory_inputs(s, {0.9, 1.0}), DimensionError);
}

TEST_CASE("terrain memory: constant-height terrain is learned within 0.02 m") {
  const double level = 0.15;
  auto sim_cfg = experiments::blindzone_sim_defaults();
  sim_cfg.duration = 4.0;
  sim::TerrainConfig tc;
  tc.base_height = level;
  sim::ScanConfig scan;
  auto stream_of = [&](std::uint32_t ep) {
    const auto traj = sim::generate_trajectory(5, ep, sim_cfg);
    const auto terrain = sim::generate_terrain(5, sim::TerrainKind::flat, tc);
    std::vector<double> speed;
    for (const auto& f : traj.frames) speed.push_back(f.v_gt[0]);
    const auto st = sim::terrain_feature_stream(traj, terrain, {}, ep, scan);
    return std::pair{memory_inputs(st, speed), st.truth};
  };
  const std::size_t batch = 4;
  std::vector<std::pair<Tensor, Tensor>> eps;
  for (std::uint32_t e = 0; e < batch; ++e) eps.push_back(stream_of(e));
  const std::size_t steps = eps[0].first.rows();
  Tensor x({steps * batch, eps[0].first.cols()}), y({steps * batch, scan.samples});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      std::copy(eps[b].first.row(t).begin(), eps[b].first.row(t).end(), x.row(t * batch + b).begin());
      std::copy(eps[b].second.row(t).begin(), eps[b].second.row(t).end(), y.row(t * batch + b).begin());
    }
  }
  Rng rng = fork(5, 12);
  auto model = TerrainMemoryModel::make(x.cols(), 16, 16, scan.samples, rng);
  auto params = model.params();
  nn::AdamState adam(params, {1e-2});
  TerrainMemoryModel::Cache cache;
  for (int it = 0; it < 300; ++it) {
    const Tensor pred = model.forward(x, batch, &cache);
    Tensor d = pred;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = 2.0 * (pred[i] - y[i]) / static_cast<double>(d.size());
    nn::zero_grads(params);
    model.backward(cache, d);
    nn::adam_step(params, adam);
  }
  const auto held_out = stream_of(100);
  const Tensor pred = model.forward(held_out.first, 1);
  double worst = 0;
  for (std::size_t t = 25; t < pred.rows(); ++t) {
    for (std::size_t j = 0; j < pred.cols(); ++j) worst = std::max(worst, std::abs(pred.at(t, j) - level));
  }
  CHECK(worst < 0.02);
}
