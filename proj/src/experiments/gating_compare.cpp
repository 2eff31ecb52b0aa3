#include "agility/experiments/gating_compare.hpp"

#include "agility/error.hpp"

namespace agility::experiments {

void GatingCompareConfig::validate() const {
  gating.validate();
  distill.validate();
  if (gated_seeds != fixed_seeds) {
    throw ConfigError("gating: gated_seeds (" + std::to_string(gated_seeds) +
                      ") and fixed_seeds (" + std::to_string(fixed_seeds) + ") must match");
  }
  if (gated_seeds == 0) throw ConfigError("gating: seed count must be positive");
  if (!(fixed_lambda >= 0 && fixed_lambda <= 1)) {
    throw ConfigError("gating.fixed_lambda must lie in [0, 1]");
  }
}

namespace {

double mean_bc(const std::vector<gating::DistillResult>& runs) {
  double s = 0;
  for (const auto& r : runs) s += r.final_val_bc;
  return s / static_cast<double>(runs.size());
}

}  // namespace

double GatingCompareResult::gated_mean_bc() const { return mean_bc(gated); }
double GatingCompareResult::fixed_mean_bc() const { return mean_bc(fixed); }

GatingCompareResult run_gating_compare(const GatingCompareConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  GatingCompareResult r;
  gating::DistillConfig gated = cfg.distill;
  gated.fixed_lambda.reset();
  gating::DistillConfig fixed = cfg.distill;
  fixed.fixed_lambda = cfg.fixed_lambda;
  for (std::size_t i = 0; i < cfg.gated_seeds; ++i) {
    const std::uint64_t s = seed + i;
    r.seeds.push_back(s);
    r.gated.push_back(gating::distill_toy(cfg.gating, gated, s));
    r.fixed.push_back(gating::distill_toy(cfg.gating, fixed, s));
  }
  return r;
}

}  // namespace agility::experiments
