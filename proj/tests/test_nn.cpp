#include <doctest.h>

#include <cmath>

#include "agility/error.hpp"
#include "agility/nn/adam.hpp"
#include "agility/nn/attention.hpp"
#include "agility/nn/checkpoint.hpp"
#include "agility/nn/film.hpp"
#include "agility/nn/kernels.hpp"
#include "agility/nn/layers.hpp"
#include "grad_suite.hpp"

using namespace agility;
using namespace agility::nn;
using agility::testing::random_tensor;

TEST_CASE("linear: identity and scalar affine") {
  LayerParams eye(Tensor::matrix(2, 2, {1, 0, 0, 1}), Tensor({2}));
  const Tensor y = linear(Tensor::vector({1, 0}), eye);
  CHECK(y[0] == 1.0);
  CHECK(y[1] == 0.0);

  LayerParams s(Tensor::matrix(1, 1, {3}), Tensor::vector({1}));
  CHECK(linear(Tensor::vector({2}), s)[0] == 7.0);
}

TEST_CASE("linear: shape mismatch throws") {
  const auto p = make_linear(3, 2);
  CHECK_THROWS_AS(linear(Tensor({2, 4}), p), DimensionError);
}

TEST_CASE("conv block: zero input with zero weights gives zero output") {
  auto block = ResidualBlock::make(4, 4, 3);
  const Tensor y = conv1d_residual_block(Tensor({10, 4}), block);
  CHECK(max_abs(y) == 0.0);
}

TEST_CASE("conv block: identity kernel with zero projection reproduces ELU(x)") {
  Rng rng = fork(7, 0);
  const std::size_t c = 3;
  auto block = ResidualBlock::make(c, c, 3);
  // conv_a: centre tap identity so hidden = ELU(x); conv_b: centre tap
  // identity; proj zero. Output = ELU(x).
  for (std::size_t i = 0; i < c; ++i) {
    block.conv_a.weight.at(c + i, i) = 1.0;
    block.conv_b.weight.at(c + i, i) = 1.0;
  }
  const Tensor x = random_tensor(rng, {10, c});
  const Tensor y = conv1d_residual_block(x, block);
  const Tensor e = elu(x);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == e[i]);
}

TEST_CASE("attention: single key returns its value exactly") {
  const Tensor q = Tensor::matrix(1, 2, {0.3, -1.2});
  const Tensor k = Tensor::matrix(1, 2, {2.0, 0.5});
  const Tensor v = Tensor::matrix(1, 3, {1.5, -2.0, 0.25});
  const Tensor out = softmax_attention(q, k, v);
  for (std::size_t i = 0; i < 3; ++i) CHECK(out[i] == v[i]);
}

TEST_CASE("attention: identical keys average the values") {
  const Tensor q = Tensor::matrix(1, 2, {0.7, 0.1});
  const Tensor k = Tensor::matrix(2, 2, {1.0, 2.0, 1.0, 2.0});
  const Tensor v = Tensor::matrix(2, 2, {1.0, 4.0, 3.0, -2.0});
  const Tensor out = softmax_attention(q, k, v);
  CHECK(out[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("attention: two-key weight matches direct softmax") {
  const Tensor q = Tensor::matrix(1, 2, {1, 0});
  const Tensor k = Tensor::matrix(2, 2, {10, 0, 0, 10});
  const Tensor v = Tensor::matrix(2, 1, {1, 0});
  // Logits 10/sqrt(2) and 0.
  const double oracle = 1.0 / (1.0 + std::exp(-10.0 / std::sqrt(2.0)));
  const double w1 = softmax_attention(q, k, v)[0];
  CHECK(w1 == doctest::Approx(oracle).epsilon(1e-14));
  CHECK(w1 == doctest::Approx(0.99915).epsilon(1e-5));
}

TEST_CASE("attention: output lies in the convex hull of V rows") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = fork(seed, 11);
    const Tensor q = random_tensor(rng, {4, 3}, 3.0);
    const Tensor k = random_tensor(rng, {6, 3}, 3.0);
    const Tensor v = random_tensor(rng, {6, 2});
    const Tensor out = softmax_attention(q, k, v);
    for (std::size_t c = 0; c < 2; ++c) {
      double lo = v.at(0, c), hi = v.at(0, c);
      for (std::size_t j = 1; j < 6; ++j) {
        lo = std::min(lo, v.at(j, c));
        hi = std::max(hi, v.at(j, c));
      }
      for (std::size_t i = 0; i < 4; ++i) {
        CHECK(out.at(i, c) >= lo - 1e-15);
        CHECK(out.at(i, c) <= hi + 1e-15);
      }
    }
  }
}

TEST_CASE("attention: invariant to a constant logit shift") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = fork(seed, 12);
    const Tensor q = random_tensor(rng, {3, 4});
    const Tensor k = random_tensor(rng, {5, 4});
    const Tensor v = random_tensor(rng, {5, 2});
    Tensor bias({3, 5});
    bias.fill(uniform(rng, -50, 50));
    const Tensor a = softmax_attention(q, k, v);
    const Tensor b = softmax_attention(q, k, v, &bias);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
  }
}

TEST_CASE("film: identity, suppression and elementwise arithmetic") {
  Rng rng = fork(3, 0);
  const Tensor f = random_tensor(rng, {4, 3});
  const Tensor c = random_tensor(rng, {4, 2});
  const auto ident = make_film(2, 3);
  CHECK(film(f, c, ident) == f);

  // gamma = 0, beta = 0.75: output is beta whatever F holds.
  auto off = make_linear(2, 6);
  for (std::size_t ch = 0; ch < 3; ++ch) off.bias[3 + ch] = 0.75;
  const Tensor s = film(f, c, off);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == 0.75);

  auto p = make_linear(1, 4);
  p.bias = Tensor::vector({2, 2, 1, 1});
  const Tensor out = film(Tensor::matrix(1, 2, {0.5, -1}), Tensor({1, 1}), p);
  CHECK(out[0] == 2.0);
  CHECK(out[1] == -1.0);
}

TEST_CASE("film: channel mismatch throws") {
  CHECK_THROWS_AS(film(Tensor({2, 3}), Tensor({2, 1}), make_film(1, 4)), DimensionError);
}

TEST_CASE("grad_check: every op over 20 seeds at 1e-5") {
  for (const auto& check : agility::testing::all_grad_checks()) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto r = check.run(seed, 1e-5);
      INFO(check.op << " seed " << seed << " worst " << r.worst_target << " err "
                    << r.max_rel_error);
      CHECK(r.passed);
    }
  }
}

TEST_CASE("grad_check: linear passes at 1e-6") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CHECK(agility::testing::check_linear(seed, 1e-6).passed);
  }
}

TEST_CASE("grad_check: corrupted backward is caught") {
  Rng rng = fork(5, 0);
  Tensor x = random_tensor(rng, {3, 4});
  auto p = make_linear(4, 2);
  agility::testing::random_layer(p, rng);
  const Tensor r = random_tensor(rng, {3, 2});
  p.zero_grad();
  linear_backward(x, r, p);
  Tensor bad = p.grad_weight;
  bad[1] += 0.01;
  auto loss = [&] { return agility::testing::contract(r, linear(x, p)); };
  CHECK_FALSE(grad_check(loss, p.weight.values(), bad.values(), 1e-5).passed);
  CHECK(grad_check(loss, p.weight.values(), p.grad_weight.values(), 1e-5).passed);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Tensor w = Tensor::vector({0.5, -1.0});
  Tensor g({2});
  ParamList list{{"w", &w, &g}};
  AdamState s(list);
  for (int i = 0; i < 5; ++i) adam_step(list, s);
  CHECK(w[0] == 0.5);
  CHECK(w[1] == -1.0);
}

TEST_CASE("adam: one scalar step follows the bias-corrected formula") {
  Tensor w = Tensor::vector({2.0});
  Tensor g = Tensor::vector({1.0});
  ParamList list{{"w", &w, &g}};
  AdamState s(list);
  adam_step(list, s);
  // m = 0.1, v = 0.001; corrected m_hat = 1, v_hat = 1.
  const double m_hat = (0.1 * 1.0) / (1 - 0.9);
  const double v_hat = (0.001 * 1.0) / (1 - 0.999);
  const double oracle = 2.0 - 1e-3 * m_hat / (std::sqrt(v_hat) + 1e-8);
  CHECK(w[0] == doctest::Approx(oracle).epsilon(1e-14));
  CHECK(2.0 - w[0] == doctest::Approx(1e-3).epsilon(1e-4));
}

TEST_CASE("adam: constant gradient moves by about lr in -sign(g)") {
  Tensor w = Tensor::vector({0.0, 0.0});
  Tensor g = Tensor::vector({3.0, -0.2});
  ParamList list{{"w", &w, &g}};
  AdamState s(list, {0.01});
  double prev0 = 0, prev1 = 0;
  for (int i = 0; i < 500; ++i) {
    prev0 = w[0];
    prev1 = w[1];
    adam_step(list, s);
  }
  CHECK(prev0 - w[0] == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(w[1] - prev1 == doctest::Approx(0.01).epsilon(1e-5));
}

TEST_CASE("adam: non-finite gradient throws and leaves parameters") {
  Tensor w = Tensor::vector({1.0});
  Tensor g = Tensor::vector({std::nan("")});
  ParamList list{{"w", &w, &g}};
  AdamState s(list);
  CHECK_THROWS_AS(adam_step(list, s), NumericError);
  CHECK(w[0] == 1.0);
}

TEST_CASE("kernels: fast path is bit-identical to the reference") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = fork(seed, 21);
    const std::size_t n = 1 + seed % 13, k = 1 + (seed * 7) % 17, m = 1 + (seed * 5) % 19;
    const Tensor a = random_tensor(rng, {n, k});
    const Tensor at = random_tensor(rng, {k, n});
    const Tensor b = random_tensor(rng, {k, m});
    const Tensor bt = random_tensor(rng, {m, k});
    const Tensor c0 = random_tensor(rng, {n, m});
    for (bool acc : {false, true}) {
      Tensor f = c0, r = c0;
      kernels::fast::matmul(a.data(), b.data(), f.data(), n, k, m, acc);
      kernels::reference::matmul(a.data(), b.data(), r.data(), n, k, m, acc);
      CHECK(f == r);
      f = c0;
      r = c0;
      kernels::fast::matmul_tn(at.data(), b.data(), f.data(), n, k, m, acc);
      kernels::reference::matmul_tn(at.data(), b.data(), r.data(), n, k, m, acc);
      CHECK(f == r);
      f = c0;
      r = c0;
      kernels::fast::matmul_nt(a.data(), bt.data(), f.data(), n, k, m, acc);
      kernels::reference::matmul_nt(a.data(), bt.data(), r.data(), n, k, m, acc);
      CHECK(f == r);
      Tensor fs({m}), rs({m});
      kernels::fast::column_sum(b.data(), fs.data(), k, m, acc);
      kernels::reference::column_sum(b.data(), rs.data(), k, m, acc);
      CHECK(fs == rs);
    }
  }
}

TEST_CASE("ops are deterministic") {
  Rng rng = fork(1, 0);
  const Tensor x = random_tensor(rng, {10, 6});
  auto block = ResidualBlock::make(6, 4, 3);
  block.init(rng);
  CHECK(conv1d_residual_block(x, block) == conv1d_residual_block(x, block));
}

TEST_CASE("checkpoint: round trip and mismatch") {
  Rng rng = fork(2, 0);
  auto p = make_linear(3, 2);
  init_glorot(p, 3, 2, rng);
  ParamList list;
  append_params(list, "fc", p);
  const auto doc = to_checkpoint(list);
  auto q = make_linear(3, 2);
  ParamList other;
  append_params(other, "fc", q);
  from_checkpoint(doc, other);
  CHECK(q.weight == p.weight);
  CHECK(q.bias == p.bias);

  auto wrong = make_linear(2, 2);
  ParamList bad;
  append_params(bad, "fc", wrong);
  CHECK_THROWS_AS(from_checkpoint(doc, bad), agility::Error);
}
