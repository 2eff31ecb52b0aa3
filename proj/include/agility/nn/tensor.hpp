#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace agility::nn {

/// Dense row-major array of doubles. Rank-1 tensors behave as a single row
/// wherever a matrix is expected.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values);
  static Tensor zeros_like(const Tensor& other);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim(std::size_t axis) const;
  // Matrix view: cols is the last axis, rows everything before it.
  std::size_t cols() const noexcept;
  std::size_t rows() const noexcept;

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }
  double& at(std::size_t r, std::size_t c) noexcept {
    return data_[r * cols() + c];
  }
  double at(std::size_t r, std::size_t c) const noexcept {
    return data_[r * cols() + c];
  }

  std::span<double> row(std::size_t r) noexcept {
    return std::span<double>(data_).subspan(r * cols(), cols());
  }
  std::span<const double> row(std::size_t r) const noexcept {
    return std::span<const double>(data_).subspan(r * cols(), cols());
  }

  void fill(double v) noexcept;
  Tensor reshaped(std::vector<std::size_t> shape) const;
  bool all_finite() const noexcept;
  bool same_shape(const Tensor& other) const noexcept {
    return shape_ == other.shape_;
  }

  bool operator==(const Tensor&) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// Throws NumericError naming `what` if any element is NaN/Inf.
void require_finite(const Tensor& t, std::string_view what);

/// Throws DimensionError unless `t` has the given shape.
void require_shape(const Tensor& t, const std::vector<std::size_t>& shape,
                   std::string_view what);

// Elementwise helpers used across modules.
Tensor add(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
void axpy(double alpha, const Tensor& x, Tensor& y);
double dot(const Tensor& a, const Tensor& b);
double max_abs(const Tensor& t);
double l2_norm(std::span<const double> v);

}  // namespace agility::nn
