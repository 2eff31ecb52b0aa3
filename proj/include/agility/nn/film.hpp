#pragma once

#include "agility/nn/layers.hpp"
#include "agility/nn/tensor.hpp"

namespace agility::nn {

// Feature-wise linear modulation: out = gamma(c) * F + beta(c), with gamma
// and beta produced by one affine map of the conditioning signal c. The
// map's output is laid out as [gamma (channels) | beta (channels)].

/// Identity-initialized modulator: gamma = 1, beta = 0 for every input.
LayerParams make_film(std::size_t cond_dim, std::size_t channels);

/// features [n x channels], cond [n x cond_dim].
Tensor film(const Tensor& features, const Tensor& cond, const LayerParams& p);

struct FilmGrads {
  Tensor d_features;
  Tensor d_cond;
};

FilmGrads film_backward(const Tensor& features, const Tensor& cond,
                        const Tensor& dout, LayerParams& p);

}  // namespace agility::nn
