#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "agility/nn/layers.hpp"
#include "agility/nn/tensor.hpp"
#include "agility/random.hpp"

namespace agility::ssm {

/// Recurrent memory of one sequence. Advanced by exactly one step per input;
/// a state must have a single writer.
struct SsmState {
  nn::Tensor h;
  std::uint64_t step_index = 0;
};

/// The per-step system h' = A h + B x, y = C h' made explicit.
struct StepMatrices {
  nn::Tensor a;  // [state] diagonal of A_t, each entry in (0, 1)
  nn::Tensor b;  // [state x input]
  nn::Tensor c;  // [output x state]
};

/// Selective diagonal state-space layer.
///
///   delta_t = softplus(x W_delta + b_delta)          step size per channel
///   A_t     = exp(-delta_t * exp(log_rate))          diagonal, in (0, 1)
///   B_t x_t = (1 - A_t) * (x W_in)                   zero-order hold
///   g_t     = 2 sigmoid(x W_gate + b_gate)
///   y_t     = (g_t * h_t) W_out                      C_t = W_out^T diag(g_t)
///
/// Because B_t carries the (1 - A_t) factor, h_t is a convex combination of
/// h_{t-1} and x W_in, so |h_t|_inf <= max(|h_0|_inf, sup |x W_in|_inf).
struct SsmLayer {
  nn::LayerParams delta;  // [input x state]
  nn::Tensor log_rate;    // [state]
  nn::Tensor grad_log_rate;
  nn::Tensor w_in;  // [input x state]
  nn::Tensor grad_w_in;
  nn::LayerParams gate;  // [input x state]
  nn::Tensor w_out;      // [state x output]
  nn::Tensor grad_w_out;

  static SsmLayer make(std::size_t input, std::size_t state,
                       std::size_t output);

  std::size_t input_dim() const { return w_in.dim(0); }
  std::size_t state_dim() const { return w_in.dim(1); }
  std::size_t output_dim() const { return w_out.dim(1); }

  SsmState initial_state() const;
  StepMatrices matrices(const nn::Tensor& x) const;

  /// Step sizes log-spaced so decays span roughly 0.5 .. 0.999 per step.
  void init(Rng& rng);
  void append_params(nn::ParamList& list, const std::string& prefix);
};

struct StepResult {
  nn::Tensor y;
  SsmState state;
};

/// h' = a * h + b x, y = c h' for explicitly given matrices.
StepResult linear_step(const StepMatrices& m, const SsmState& state,
                       const nn::Tensor& x);

/// One streaming step. Cost depends only on the layer dimensions.
StepResult ssm_step(const SsmLayer& layer, const SsmState& state,
                    const nn::Tensor& x);

struct ScanResult {
  std::vector<nn::Tensor> ys;
  SsmState state;
};

/// Processes a whole sequence through the batched path (projections for all
/// steps at once). Matches folding ssm_step over `xs` bit-for-bit.
ScanResult ssm_scan(const SsmLayer& layer, const SsmState& initial,
                    const std::vector<nn::Tensor>& xs);

// ---- training path --------------------------------------------------------
//
// A batch of equal-length sequences is laid out time-major:
// row (t * batch + b) holds step t of sequence b.

struct ScanCache {
  std::size_t steps = 0;
  std::size_t batch = 0;
  std::uint64_t first_step = 0;
  nn::Tensor x;      // [(T*B) x input]
  nn::Tensor zdelta; // pre-softplus
  nn::Tensor decay;  // A_t
  nn::Tensor u;      // x W_in
  nn::Tensor zgate;
  nn::Tensor gate;
  nn::Tensor h;      // [((T+1)*B) x state], row block 0 is h0
};

/// Returns y [(T*B) x output]. `h0` is [batch x state].
nn::Tensor scan_forward(const SsmLayer& layer, const nn::Tensor& x,
                        std::size_t batch, const nn::Tensor& h0,
                        ScanCache* cache = nullptr,
                        std::uint64_t first_step = 0);

struct ScanGrads {
  nn::Tensor dx;
  nn::Tensor dh0;
};

/// Backpropagation through time. Accumulates parameter gradients.
ScanGrads scan_backward(SsmLayer& layer, const ScanCache& cache,
                        const nn::Tensor& dy);

/// Final state rows [batch x state] of a cached scan.
nn::Tensor final_state(const ScanCache& cache);

}  // namespace agility::ssm
