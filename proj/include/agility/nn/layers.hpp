#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "agility/nn/tensor.hpp"
#include "agility/random.hpp"

namespace agility::nn {

/// Weights and biases of one affine map, with gradient accumulators of
/// identical shape. Value type: copying a layer copies its parameters.
struct LayerParams {
  Tensor weight;
  Tensor bias;
  Tensor grad_weight;
  Tensor grad_bias;

  LayerParams() = default;
  LayerParams(Tensor w, Tensor b);

  void zero_grad();
};

/// Non-owning handle used by the optimizer and checkpoint code.
struct ParamRef {
  std::string name;
  Tensor* value;
  Tensor* grad;
};
using ParamList = std::vector<ParamRef>;

void append_params(ParamList& list, const std::string& prefix, LayerParams& p);
void zero_grads(const ParamList& list);
std::size_t parameter_count(const ParamList& list);

/// Glorot-uniform weights scaled by `gain`, zero bias.
void init_glorot(LayerParams& p, std::size_t fan_in, std::size_t fan_out,
                 Rng& rng, double gain = 1.0);

// ---- affine ---------------------------------------------------------------

/// weight [in x out], bias [out].
LayerParams make_linear(std::size_t in, std::size_t out);

/// y = x W + b for x of shape [n x in] (rank 1 is treated as n = 1).
Tensor linear(const Tensor& x, const LayerParams& p);

/// Accumulates dW, db into `p` and returns dx.
Tensor linear_backward(const Tensor& x, const Tensor& dy, LayerParams& p);

// ---- activations ----------------------------------------------------------

double softplus(double x);
double sigmoid(double x);

Tensor elu(const Tensor& x);
/// Uses the forward output: dELU/dx = 1 for y > 0, y + 1 otherwise.
Tensor elu_backward(const Tensor& y, const Tensor& dy);

// ---- 1-D convolution ------------------------------------------------------
//
// Sequences are stored as [(batch * steps) x channels], batch-major, so the
// convolution lowers to one matmul over an im2col buffer. Padding is
// symmetric zero padding of (kernel - 1) / 2 frames, which preserves length.

/// weight [(kernel * in) x out], bias [out]. `kernel` must be odd.
LayerParams make_conv1d(std::size_t in, std::size_t out, std::size_t kernel);

std::size_t conv_kernel(const LayerParams& p, std::size_t in_channels);

Tensor conv1d(const Tensor& x, std::size_t steps, const LayerParams& p);
Tensor conv1d_backward(const Tensor& x, std::size_t steps, const Tensor& dy,
                       LayerParams& p);

/// conv(k) -> ELU -> conv(k), summed with a 1x1 projection of the input.
struct ResidualBlock {
  LayerParams conv_a;
  LayerParams conv_b;
  LayerParams proj;
  std::size_t kernel = 3;

  static ResidualBlock make(std::size_t in, std::size_t out,
                            std::size_t kernel);

  struct Cache {
    Tensor x;
    Tensor hidden;  // ELU(conv_a(x))
    std::size_t steps = 0;
  };

  Tensor forward(const Tensor& x, std::size_t steps,
                 Cache* cache = nullptr) const;
  Tensor backward(const Cache& cache, const Tensor& dy);

  void init(Rng& rng);
  void append_params(ParamList& list, const std::string& prefix);
  std::size_t in_channels() const { return proj.weight.dim(0); }
  std::size_t out_channels() const { return proj.weight.dim(1); }
};

/// Single-sequence entry point: x is [time x channels].
Tensor conv1d_residual_block(const Tensor& x, const ResidualBlock& block);

}  // namespace agility::nn
