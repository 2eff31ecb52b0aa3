#include "agility/nn/film.hpp"

#include "agility/error.hpp"

namespace agility::nn {

namespace {

std::size_t check_film(const Tensor& features, const Tensor& cond,
                       const LayerParams& p) {
  const std::size_t channels = features.cols();
  if (p.weight.dim(1) != 2 * channels) {
    throw DimensionError("film: modulator produces " +
                         std::to_string(p.weight.dim(1) / 2) +
                         " channels, features have " +
                         std::to_string(channels));
  }
  if (cond.rows() != features.rows()) {
    throw DimensionError("film: conditioning rows differ from feature rows");
  }
  return channels;
}

}  // namespace

LayerParams make_film(std::size_t cond_dim, std::size_t channels) {
  LayerParams p = make_linear(cond_dim, 2 * channels);
  for (std::size_t c = 0; c < channels; ++c) p.bias[c] = 1.0;
  return p;
}

Tensor film(const Tensor& features, const Tensor& cond, const LayerParams& p) {
  const std::size_t channels = check_film(features, cond, p);
  const Tensor mod = linear(cond, p);
  Tensor out = features;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const double* gamma = mod.data() + i * 2 * channels;
    const double* beta = gamma + channels;
    double* o = out.data() + i * channels;
    for (std::size_t c = 0; c < channels; ++c) o[c] = gamma[c] * o[c] + beta[c];
  }
  return out;
}

FilmGrads film_backward(const Tensor& features, const Tensor& cond,
                        const Tensor& dout, LayerParams& p) {
  const std::size_t channels = check_film(features, cond, p);
  if (!dout.same_shape(features) && dout.size() != features.size()) {
    throw DimensionError("film backward: dout shape mismatch");
  }
  const Tensor mod = linear(cond, p);
  const std::size_t n = features.rows();
  Tensor dmod({n, 2 * channels});
  FilmGrads g{Tensor(features.shape()), Tensor()};
  for (std::size_t i = 0; i < n; ++i) {
    const double* gamma = mod.data() + i * 2 * channels;
    for (std::size_t c = 0; c < channels; ++c) {
      const double d = dout[i * channels + c];
      g.d_features[i * channels + c] = d * gamma[c];
      dmod.at(i, c) = d * features[i * channels + c];
      dmod.at(i, channels + c) = d;
    }
  }
  g.d_cond = linear_backward(cond, dmod, p);
  return g;
}

}  // namespace agility::nn
