#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "agility/error.hpp"
#include "agility/experiments/gating_compare.hpp"
#include "agility/gating/gating.hpp"

using namespace agility;
using namespace agility::gating;

namespace {

// Spearman rank correlation of `v` against its index (no ties expected).
double rank_trend(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0;
    for (std::size_t j = 0; j < n; ++j) r += v[j] < v[i];
    rank[i] = r;
  }
  const double mid = (static_cast<double>(n) - 1) / 2;
  double num = 0, den_i = 0, den_r = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double di = static_cast<double>(i) - mid;
    num += di * (rank[i] - mid);
    den_i += di * di;
    den_r += (rank[i] - mid) * (rank[i] - mid);
  }
  return num / std::sqrt(den_i * den_r);
}

}  // namespace

TEST_CASE("gate: discrepancy tau gives exactly one half") {
  const GatingConfig cfg;
  CHECK(gate_from_discrepancy(cfg.tau, cfg) == 0.5);
  const std::vector<double> s{0.2, 0.0}, t{0.0, 0.0};
  CHECK(gate(s, t, cfg) == 0.5);
}

TEST_CASE("gate: agreement gives sigmoid(k tau)") {
  const GatingConfig cfg{0.2, 10.0};
  const std::vector<double> a{0.3, -0.1, 0.7};
  const double oracle = 1.0 / (1.0 + std::exp(-2.0));
  CHECK(gate(a, a, cfg) == doctest::Approx(oracle).epsilon(1e-15));
  CHECK(gate(a, a, cfg) == doctest::Approx(0.88080).epsilon(1e-5));
}

TEST_CASE("gate: large discrepancy saturates towards imitation") {
  const GatingConfig cfg;
  CHECK(gate_from_discrepancy(cfg.tau + 100.0 / cfg.k, cfg) < 1e-40);
  CHECK(gate_from_discrepancy(cfg.tau + 100.0 / cfg.k, cfg) > 0.0);
}

TEST_CASE("gate: strictly decreasing on a 1000-point grid, range (0, sigmoid(k tau)]") {
  const GatingConfig cfg;
  const double top = 1.0 / (1.0 + std::exp(-cfg.k * cfg.tau));
  double prev = gate_from_discrepancy(0.0, cfg);
  CHECK(prev == doctest::Approx(top).epsilon(1e-15));
  for (int i = 1; i < 1000; ++i) {
    const double g = gate_from_discrepancy(2.0 * i / 999.0, cfg);
    CHECK(g < prev);
    CHECK(g > 0.0);
    prev = g;
  }
}

TEST_CASE("gate: scale covariance") {
  const std::vector<double> s{0.4, -0.3}, t{0.1, 0.2};
  const GatingConfig base{0.2, 10.0};
  for (double c : {0.01, 0.5, 3.0, 100.0}) {
    std::vector<double> cs{c * s[0], c * s[1]}, ct{c * t[0], c * t[1]};
    const GatingConfig scaled{base.tau * c, base.k / c};
    CHECK(gate(cs, ct, scaled) == doctest::Approx(gate(s, t, base)).epsilon(1e-12));
  }
}

TEST_CASE("gate: size mismatch and invalid config throw") {
  const std::vector<double> a{1.0}, b{1.0, 2.0};
  CHECK_THROWS_AS(gate(a, b, {}), DimensionError);
  CHECK_THROWS_AS((GatingConfig{0.2, 0.0}.validate()), ConfigError);
  CHECK_THROWS_AS((GatingConfig{-0.1, 10.0}.validate()), ConfigError);
}

TEST_CASE("total_loss: endpoints, midpoint and affinity") {
  CHECK(total_loss(2.0, 4.0, 0.0) == 4.0);
  CHECK(total_loss(2.0, 4.0, 1.0) == 2.0);
  CHECK(total_loss(2.0, 4.0, 0.5) == 3.0);
  for (double l = 0.0; l <= 1.0; l += 0.125) {
    CHECK(total_loss(2.0, 4.0, l) == doctest::Approx(4.0 - 2.0 * l).epsilon(1e-15));
  }
  CHECK_THROWS_AS(total_loss(1.0, 1.0, 1.5), Error);
}

TEST_CASE("distill_toy: clean regression converges to the teacher") {
  DistillConfig cfg;
  cfg.corruption = false;
  cfg.fixed_lambda = 0.0;
  const auto r = distill_toy({}, cfg, 1);
  CHECK(r.final_val_discrepancy < 0.01);
}

TEST_CASE("distill_toy: gated lambda rises as the discrepancy falls") {
  const auto r = distill_toy({}, {}, 2);
  std::vector<double> blocks;
  for (std::size_t i = 0; i + 10 <= r.curve.size(); i += 10) {
    double s = 0;
    for (std::size_t j = i; j < i + 10; ++j) s += r.curve[j].lambda_mean;
    blocks.push_back(s / 10);
  }
  REQUIRE(blocks.size() >= 10);
  CHECK(blocks.back() > blocks.front());
  CHECK(rank_trend(blocks) > 0.8);
}

TEST_CASE("distill_toy: deterministic, and curve CSV has one row per step") {
  DistillConfig cfg;
  cfg.steps = 50;
  const auto a = distill_toy({}, cfg, 3);
  const auto b = distill_toy({}, cfg, 3);
  CHECK(a.final_val_bc == b.final_val_bc);
  REQUIRE(a.curve.size() == 50);
  std::ostringstream out;
  write_distill_csv(a.curve, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "step,lambda_mean,l_rl,l_bc,l_total,val_bc");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 50);
}

TEST_CASE("gating comparison: gated is not worse than fixed 0.5 over 5 seeds") {
  const auto r = experiments::run_gating_compare({}, 0);
  REQUIRE(r.gated.size() == 5);
  CHECK(r.gated_mean_bc() <= r.fixed_mean_bc());
}

TEST_CASE("gating comparison: mismatched seed counts are a config error") {
  experiments::GatingCompareConfig cfg;
  cfg.fixed_seeds = 4;
  CHECK_THROWS_AS(experiments::run_gating_compare(cfg, 0), ConfigError);
}
