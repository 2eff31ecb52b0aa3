#pragma once

#include "agility/estimator/estimate.hpp"

namespace agility::estimator {

/// Sum over axes of the Huber penalty on e = v_net - v_gt.
double huber(const sim::Vec3& v_gt, const sim::Vec3& v_net, double delta);

/// Huber term plus nll_weight * sum_axes(e^2 / (2 sigma) + ln(sigma) / 2).
/// Variances below the floor are clamped.
double huber_gaussian_loss(const sim::Vec3& v_gt, const VelocityEstimate& est,
                           double delta, double nll_weight);

struct LossGrad {
  double loss = 0.0;
  sim::Vec3 d_v_net{};
  sim::Vec3 d_raw_sigma{};
};

/// Same loss parametrized by the network's raw sigma output, where
/// sigma = softplus(raw) + floor, with gradients for both heads.
LossGrad huber_gaussian_grad(const sim::Vec3& v_gt, const sim::Vec3& v_net,
                             const sim::Vec3& raw_sigma, double delta,
                             double nll_weight);

double sigma_from_raw(double raw);

}  // namespace agility::estimator
