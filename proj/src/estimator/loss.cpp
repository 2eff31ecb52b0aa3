#include "agility/estimator/loss.hpp"

#include <algorithm>
#include <cmath>

#include "agility/error.hpp"
#include "agility/nn/layers.hpp"

namespace agility::estimator {

namespace {

double huber_axis(double e, double delta) {
  const double a = std::abs(e);
  return a < delta ? 0.5 * e * e : delta * (a - 0.5 * delta);
}

double huber_axis_grad(double e, double delta) {
  return std::abs(e) < delta ? e : (e > 0 ? delta : -delta);
}

}  // namespace

double sigma_from_raw(double raw) { return nn::softplus(raw) + kSigmaFloor; }

double huber(const sim::Vec3& v_gt, const sim::Vec3& v_net, double delta) {
  if (!(delta > 0)) throw ConfigError("huber: delta must be positive");
  double total = 0.0;
  for (int i = 0; i < 3; ++i) total += huber_axis(v_net[i] - v_gt[i], delta);
  return total;
}

double huber_gaussian_loss(const sim::Vec3& v_gt, const VelocityEstimate& est,
                           double delta, double nll_weight) {
  double nll = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double e = est.v_net[i] - v_gt[i];
    const double s = std::max(est.sigma[i], kSigmaFloor);
    nll += e * e / (2.0 * s) + 0.5 * std::log(s);
  }
  return huber(v_gt, est.v_net, delta) + nll_weight * nll;
}

LossGrad huber_gaussian_grad(const sim::Vec3& v_gt, const sim::Vec3& v_net,
                             const sim::Vec3& raw_sigma, double delta,
                             double nll_weight) {
  if (!(delta > 0)) throw ConfigError("huber: delta must be positive");
  LossGrad g;
  for (int i = 0; i < 3; ++i) {
    const double e = v_net[i] - v_gt[i];
    const double s = sigma_from_raw(raw_sigma[i]);
    g.loss += huber_axis(e, delta) + nll_weight * (e * e / (2.0 * s) + 0.5 * std::log(s));
    g.d_v_net[i] = huber_axis_grad(e, delta) + nll_weight * e / s;
    const double d_sigma = nll_weight * (0.5 / s - e * e / (2.0 * s * s));
    g.d_raw_sigma[i] = d_sigma * nn::sigmoid(raw_sigma[i]);
  }
  return g;
}

}  // namespace agility::estimator
