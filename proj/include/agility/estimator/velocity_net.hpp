#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "agility/estimator/estimate.hpp"
#include "agility/nn/layers.hpp"
#include "agility/sim/types.hpp"

namespace agility::estimator {

enum class Architecture { mlp, resnet1d };

std::string to_string(Architecture a);
Architecture architecture_from_string(const std::string& s);

struct EstimatorConfig {
  Architecture arch = Architecture::resnet1d;
  std::size_t window = 10;
  double huber_delta = 0.5;  // m/s
  double nll_weight = 0.1;
  std::size_t mlp_hidden = 128;
  std::size_t channels = 64;
  std::size_t blocks = 3;
  std::size_t epochs = 8;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double final_lr_fraction = 0.1;  // cosine decay target
  std::size_t samples_per_epoch = 0;  // 0 uses every training window
  // Earliest frame that is trained on and scored, shared by all windows so
  // that configurations are compared on identical frames.
  std::size_t first_frame = 9;
  std::uint64_t seed = 0;

  /// Throws ConfigError on a zero window, delta <= 0, negative NLL weight, or
  /// first_frame < window - 1.
  void validate() const;
};

/// Per-frame input: accelerometer, gyro, gravity, joint positions, joint
/// velocities, contact flags.
inline constexpr std::size_t kFeatureDim = 37;

void frame_features(const sim::ProprioFrame& f, std::span<double> out);

/// Per-feature affine standardization fitted on training data.
struct Normalizer {
  std::vector<double> mean = std::vector<double>(kFeatureDim, 0.0);
  std::vector<double> scale = std::vector<double>(kFeatureDim, 1.0);

  static Normalizer fit(const sim::Dataset& ds);
  /// Normalized features of every frame, [frames x kFeatureDim].
  nn::Tensor apply(const sim::Trajectory& traj) const;
};

/// Velocity network over a window of frames. The MLP reads only the last
/// frame and has no variance head; its covariance is the constant
/// `fixed_sigma`. The 1-D ResNet stacks residual blocks (kernel 3, or 1 for a
/// single-frame window), pools the last step and the temporal mean, and emits
/// the mean and raw variance.
class VelocityNet {
 public:
  VelocityNet() = default;
  /// Hidden layers get Glorot weights; the output layer starts at zero so an
  /// untrained network predicts v = 0 and sigma = softplus(0) + floor.
  VelocityNet(const EstimatorConfig& cfg, Rng& rng);

  const EstimatorConfig& config() const { return cfg_; }
  bool has_sigma_head() const { return cfg_.arch == Architecture::resnet1d; }
  std::size_t outputs() const { return has_sigma_head() ? 6 : 3; }

  Normalizer normalizer;
  sim::Vec3 fixed_sigma{1.0, 1.0, 1.0};

  struct Cache {
    std::size_t batch = 0;
    nn::Tensor input;
    std::vector<nn::ResidualBlock::Cache> blocks;
    std::vector<nn::Tensor> activations;  // ELU outputs per block / hidden layer
    nn::Tensor pooled;
  };

  /// x holds `batch` windows, batch-major: [(batch * window) x kFeatureDim]
  /// of normalized features. Returns [batch x outputs()].
  nn::Tensor forward(const nn::Tensor& x, std::size_t batch, Cache* cache = nullptr) const;
  /// Accumulates parameter gradients; returns d input.
  nn::Tensor backward(const Cache& cache, const nn::Tensor& d_out);

  /// Converts one output row to an estimate.
  VelocityEstimate decode(std::span<const double> out) const;

  nn::ParamList params();

 private:
  EstimatorConfig cfg_;
  std::vector<nn::LayerParams> mlp_;
  std::vector<nn::ResidualBlock> blocks_;
  nn::LayerParams head_;
};

/// Throws DimensionError unless the window has the configured length.
VelocityEstimate predict_velocity(const VelocityNet& net,
                                  std::span<const sim::ProprioFrame> window);

/// Estimates for frames [first, size) of the trajectory, batched.
std::vector<VelocityEstimate> predict_trajectory(const VelocityNet& net,
                                                 const sim::Trajectory& traj,
                                                 std::size_t first);

}  // namespace agility::estimator
