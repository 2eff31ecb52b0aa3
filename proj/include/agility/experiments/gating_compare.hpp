#pragma once

#include <cstdint>
#include <vector>

#include "agility/gating/gating.hpp"

namespace agility::experiments {

struct GatingCompareConfig {
  gating::GatingConfig gating;
  gating::DistillConfig distill;  // fixed_lambda is ignored; set per variant
  std::size_t gated_seeds = 5;
  std::size_t fixed_seeds = 5;
  double fixed_lambda = 0.5;

  /// Seed counts must match so each gated run has a fixed-lambda twin.
  void validate() const;
};

struct GatingCompareResult {
  std::vector<std::uint64_t> seeds;
  std::vector<gating::DistillResult> gated;
  std::vector<gating::DistillResult> fixed;

  double gated_mean_bc() const;
  double fixed_mean_bc() const;
};

GatingCompareResult run_gating_compare(const GatingCompareConfig& cfg, std::uint64_t seed);

}  // namespace agility::experiments
