#include "agility/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "agility/error.hpp"

namespace agility::nn {

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

GradCheckReport grad_check(const std::function<double()>& loss,
                           std::span<double> x,
                           std::span<const double> analytic, double tol,
                           double step) {
  if (x.size() != analytic.size()) {
    throw DimensionError("grad_check: analytic gradient size mismatch");
  }
  GradCheckReport report;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = loss();
    x[i] = saved - step;
    const double down = loss();
    x[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down) ||
        !std::isfinite(analytic[i])) {
      throw NumericError("grad_check: non-finite value at index " +
                         std::to_string(i));
    }
    const double numeric = (up - down) / (2.0 * step);
    const double err = relative_error(analytic[i], numeric);
    if (err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_index = i;
    }
    ++report.checked;
  }
  report.passed = report.max_rel_error <= tol;
  return report;
}

}  // namespace agility::nn
