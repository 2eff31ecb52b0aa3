#pragma once

#include <cstdint>
#include <vector>

#include "agility/nn/layers.hpp"

namespace agility::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moments per parameter, in ParamList order.
struct AdamState {
  AdamConfig config;
  std::vector<Tensor> first;
  std::vector<Tensor> second;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(const ParamList& params, AdamConfig cfg = {});
};

/// One bias-corrected Adam update from the gradients held in `params`.
/// Throws NumericError (tagged with the step) on a non-finite gradient,
/// leaving parameters untouched.
void adam_step(const ParamList& params, AdamState& state);

}  // namespace agility::nn
