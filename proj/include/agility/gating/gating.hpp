#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace agility::gating {

struct GatingConfig {
  double tau = 0.2;  // consistency threshold, action units
  double k = 10.0;   // sharpness, 1 / action units

  /// Throws ConfigError unless k > 0 and tau >= 0.
  void validate() const;
};

/// lambda = sigmoid(k (tau - d)) for an action discrepancy d >= 0.
double gate_from_discrepancy(double discrepancy, const GatingConfig& cfg);

/// Gate on the Euclidean distance between student and teacher actions.
/// Throws DimensionError when the action sizes differ.
double gate(std::span<const double> a_student, std::span<const double> a_teacher,
            const GatingConfig& cfg);

/// lambda * l_rl + (1 - lambda) * l_bc. Throws Error unless lambda in [0, 1].
double total_loss(double l_rl, double l_bc, double lambda);

/// Toy distillation: a linear teacher a_T = W o acts on clean observations;
/// the student sees o + N(0, obs_noise^2) and is pulled towards a_T (BC) and
/// towards a noisy environment-optimal action a_T + N(0, action_noise^2)
/// (the RL surrogate).
struct DistillConfig {
  std::size_t obs_dim = 8;
  std::size_t action_dim = 4;
  std::size_t hidden = 64;
  std::size_t train_samples = 2048;
  std::size_t val_samples = 512;
  std::size_t batch_size = 64;
  std::size_t steps = 3000;
  double learning_rate = 3e-2;
  double final_lr_fraction = 0.05;
  double obs_noise = 0.15;
  double action_noise = 0.5;
  bool corruption = true;               // false zeroes both noise sources
  std::optional<double> fixed_lambda;   // unset: gated
  std::size_t log_every = 1;

  void validate() const;
};

struct DistillStep {
  std::size_t step = 0;
  double lambda_mean = 0.0;
  double l_rl = 0.0;
  double l_bc = 0.0;
  double l_total = 0.0;
  double val_bc = 0.0;
};

struct DistillResult {
  std::vector<DistillStep> curve;
  double final_val_bc = 0.0;
  double final_val_discrepancy = 0.0;  // mean |a_S - a_T| on validation
};

/// Trains the student with Adam, lambda per sample (held constant in the
/// gradient) and averaged for logging. Throws NumericError on a NaN loss.
DistillResult distill_toy(const GatingConfig& gating, const DistillConfig& cfg,
                          std::uint64_t seed);

/// Curve CSV: step, lambda_mean, l_rl, l_bc, l_total, val_bc.
void write_distill_csv(const std::vector<DistillStep>& curve, std::ostream& out);

}  // namespace agility::gating
