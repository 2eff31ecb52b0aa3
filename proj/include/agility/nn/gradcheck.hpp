#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace agility::nn {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  bool passed = false;
};

/// |a - n| / max(|a|, |n|, floor). The floor keeps gradients that are zero
/// up to round-off from reading as large relative errors.
double relative_error(double analytic, double numeric, double floor = 1e-3);

/// Compares `analytic` against central differences of `loss` taken by
/// perturbing each entry of `x` in place (restored afterwards). `loss` must
/// read `x` and be deterministic. Throws NumericError if any evaluated loss
/// is non-finite.
GradCheckReport grad_check(const std::function<double()>& loss,
                           std::span<double> x,
                           std::span<const double> analytic, double tol,
                           double step = 1e-5);

}  // namespace agility::nn
