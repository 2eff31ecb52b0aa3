#include "agility/ssm/terrain_memory.hpp"

#include "agility/error.hpp"
#include "agility/ssm/rope.hpp"

namespace agility::ssm {

using nn::Tensor;

Tensor terrain_memory_head(const Tensor& ys, const nn::LayerParams& p) {
  return nn::linear(ys, p);
}

Tensor memory_inputs(const sim::FeatureStream& stream, const std::vector<double>& forward_speed) {
  const std::size_t frames = stream.heights.rows();
  const std::size_t samples = stream.heights.cols();
  if (forward_speed.size() != frames || stream.frame_valid.size() != frames) {
    throw DimensionError("memory_inputs: per-frame inputs disagree in length");
  }
  Tensor x({frames, memory_input_dim(samples)});
  for (std::size_t t = 0; t < frames; ++t) {
    auto row = x.row(t);
    for (std::size_t j = 0; j < samples; ++j) {
      const double valid = stream.sample_valid.at(t, j);
      const Tensor pair = rope_encode(
          Tensor::vector({stream.heights.at(t, j) * valid, valid}), static_cast<std::int64_t>(j));
      row[2 * j] = pair[0];
      row[2 * j + 1] = pair[1];
    }
    row[2 * samples] = stream.frame_valid[t] ? 1.0 : 0.0;
    row[2 * samples + 1] = forward_speed[t];
  }
  return x;
}

TerrainMemoryModel TerrainMemoryModel::make(std::size_t input, std::size_t state,
                                            std::size_t output, std::size_t samples, Rng& rng) {
  TerrainMemoryModel m{SsmLayer::make(input, state, output), nn::make_linear(output, samples)};
  m.ssm.init(rng);
  nn::init_glorot(m.head, output, samples, rng);
  return m;
}

Tensor TerrainMemoryModel::forward(const Tensor& x, std::size_t batch, Cache* cache) const {
  const Tensor h0({batch, ssm.state_dim()});
  Tensor ys = scan_forward(ssm, x, batch, h0, cache ? &cache->scan : nullptr);
  Tensor pred = terrain_memory_head(ys, head);
  if (cache) cache->ys = std::move(ys);
  return pred;
}

void TerrainMemoryModel::backward(const Cache& cache, const Tensor& d_pred) {
  const Tensor dys = nn::linear_backward(cache.ys, d_pred, head);
  scan_backward(ssm, cache.scan, dys);
}

nn::ParamList TerrainMemoryModel::params() {
  nn::ParamList list;
  ssm.append_params(list, "ssm");
  nn::append_params(list, "head", head);
  return list;
}

MemorylessModel MemorylessModel::make(std::size_t input, std::size_t width, std::size_t samples,
                                      Rng& rng) {
  MemorylessModel m{nn::make_linear(input, width), nn::make_linear(width, samples)};
  nn::init_glorot(m.hidden, input, width, rng);
  nn::init_glorot(m.out, width, samples, rng);
  return m;
}

Tensor MemorylessModel::forward(const Tensor& x, std::size_t /*batch*/, Cache* cache) const {
  Tensor h = nn::elu(nn::linear(x, hidden));
  Tensor y = nn::linear(h, out);
  if (cache) *cache = {x, std::move(h)};
  return y;
}

void MemorylessModel::backward(const Cache& cache, const Tensor& d_pred) {
  const Tensor dh = nn::linear_backward(cache.h, d_pred, out);
  nn::linear_backward(cache.x, nn::elu_backward(cache.h, dh), hidden);
}

nn::ParamList MemorylessModel::params() {
  nn::ParamList list;
  nn::append_params(list, "hidden", hidden);
  nn::append_params(list, "out", out);
  return list;
}

}  // namespace agility::ssm
