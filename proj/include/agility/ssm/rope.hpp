#pragma once

#include <cstdint>

#include "agility/nn/tensor.hpp"

namespace agility::ssm {

inline constexpr double kRopeBase = 10000.0;

/// Rotates channel pairs (2i, 2i+1) by position * base^(-2i/d). The feature
/// dimension must be even. A rank-2 input rotates every row by the same
/// position.
nn::Tensor rope_encode(const nn::Tensor& x, std::int64_t position,
                       double base = kRopeBase);

/// Inverse rotation; rope_decode(rope_encode(x, p), p) == x up to rounding.
nn::Tensor rope_decode(const nn::Tensor& x, std::int64_t position,
                       double base = kRopeBase);

}  // namespace agility::ssm
