#include "agility/nn/adam.hpp"

#include <cmath>

#include "agility/error.hpp"

namespace agility::nn {

AdamState::AdamState(const ParamList& params, AdamConfig cfg) : config(cfg) {
  first.reserve(params.size());
  second.reserve(params.size());
  for (const auto& p : params) {
    first.emplace_back(p.value->shape());
    second.emplace_back(p.value->shape());
  }
}

void adam_step(const ParamList& params, AdamState& state) {
  if (params.size() != state.first.size()) {
    throw DimensionError("adam: parameter list does not match optimizer state");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& g = *params[i].grad;
    if (!g.same_shape(*params[i].value) || !g.same_shape(state.first[i])) {
      throw DimensionError("adam: gradient shape mismatch for " +
                           params[i].name);
    }
    if (!g.all_finite()) {
      throw NumericError("adam: non-finite gradient for " + params[i].name,
                         state.step + 1);
    }
  }

  ++state.step;
  const AdamConfig& c = state.config;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(c.beta1, t);
  const double correct2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& w = *params[i].value;
    const Tensor& g = *params[i].grad;
    Tensor& m = state.first[i];
    Tensor& v = state.second[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double mhat = m[j] / correct1;
      const double vhat = v[j] / correct2;
      w[j] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

}  // namespace agility::nn
