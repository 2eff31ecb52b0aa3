#include "agility/ssm/rope.hpp"

#include <cmath>

#include "agility/error.hpp"

namespace agility::ssm {

namespace {

nn::Tensor rotate(const nn::Tensor& x, double position, double base) {
  const std::size_t d = x.cols();
  if (d % 2 != 0) {
    throw DimensionError("rope: feature dimension must be even, got " +
                         std::to_string(d));
  }
  nn::Tensor out = x;
  for (std::size_t i = 0; i < d / 2; ++i) {
    const double theta =
        position * std::pow(base, -2.0 * static_cast<double>(i) /
                                      static_cast<double>(d));
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const double a = x[r * d + 2 * i];
      const double b = x[r * d + 2 * i + 1];
      out[r * d + 2 * i] = c * a - s * b;
      out[r * d + 2 * i + 1] = s * a + c * b;
    }
  }
  return out;
}

}  // namespace

nn::Tensor rope_encode(const nn::Tensor& x, std::int64_t position,
                       double base) {
  return rotate(x, static_cast<double>(position), base);
}

nn::Tensor rope_decode(const nn::Tensor& x, std::int64_t position,
                       double base) {
  return rotate(x, -static_cast<double>(position), base);
}

}  // namespace agility::ssm
