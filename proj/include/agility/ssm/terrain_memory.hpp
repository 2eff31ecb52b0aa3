#pragma once

#include <cstdint>

#include "agility/nn/layers.hpp"
#include "agility/sim/features.hpp"
#include "agility/ssm/ssm.hpp"

namespace agility::ssm {

/// Linear readout from SSM outputs [rows x output] to height estimates
/// [rows x samples].
nn::Tensor terrain_memory_head(const nn::Tensor& ys, const nn::LayerParams& p);

/// Per-frame input for terrain memory: each scan sample becomes the pair
/// (height * valid, valid) rotated by RoPE at its index along the ray, then
/// the frame-valid flag and the measured forward speed are appended.
inline std::size_t memory_input_dim(std::size_t samples) { return 2 * samples + 2; }

/// [frames x memory_input_dim]. `forward_speed` holds one value per frame.
nn::Tensor memory_inputs(const sim::FeatureStream& stream,
                         const std::vector<double>& forward_speed);

/// SSM followed by the height readout. Sequences are batched time-major as in
/// scan_forward.
struct TerrainMemoryModel {
  SsmLayer ssm;
  nn::LayerParams head;

  static TerrainMemoryModel make(std::size_t input, std::size_t state, std::size_t output,
                                 std::size_t samples, Rng& rng);

  struct Cache {
    ScanCache scan;
    nn::Tensor ys;
  };

  nn::Tensor forward(const nn::Tensor& x, std::size_t batch, Cache* cache = nullptr) const;
  void backward(const Cache& cache, const nn::Tensor& d_pred);
  nn::ParamList params();
};

/// Frame-by-frame baseline without recurrent state: input -> hidden (ELU) ->
/// heights.
struct MemorylessModel {
  nn::LayerParams hidden;
  nn::LayerParams out;

  static MemorylessModel make(std::size_t input, std::size_t width, std::size_t samples,
                              Rng& rng);

  struct Cache {
    nn::Tensor x, h;
  };

  nn::Tensor forward(const nn::Tensor& x, std::size_t batch, Cache* cache = nullptr) const;
  void backward(const Cache& cache, const nn::Tensor& d_pred);
  nn::ParamList params();
};

}  // namespace agility::ssm
