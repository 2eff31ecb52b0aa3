#include "agility/nn/layers.hpp"

#include <cmath>

#include "agility/error.hpp"
#include "agility/nn/kernels.hpp"

namespace agility::nn {

LayerParams::LayerParams(Tensor w, Tensor b)
    : weight(std::move(w)),
      bias(std::move(b)),
      grad_weight(Tensor::zeros_like(weight)),
      grad_bias(Tensor::zeros_like(bias)) {}

void LayerParams::zero_grad() {
  grad_weight.fill(0.0);
  grad_bias.fill(0.0);
}

void append_params(ParamList& list, const std::string& prefix,
                   LayerParams& p) {
  list.push_back({prefix + ".weight", &p.weight, &p.grad_weight});
  list.push_back({prefix + ".bias", &p.bias, &p.grad_bias});
}

void zero_grads(const ParamList& list) {
  for (const auto& p : list) p.grad->fill(0.0);
}

std::size_t parameter_count(const ParamList& list) {
  std::size_t n = 0;
  for (const auto& p : list) n += p.value->size();
  return n;
}

void init_glorot(LayerParams& p, std::size_t fan_in, std::size_t fan_out,
                 Rng& rng, double gain) {
  const double s =
      gain * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& w : p.weight.values()) w = uniform(rng, -s, s);
  p.bias.fill(0.0);
}

LayerParams make_linear(std::size_t in, std::size_t out) {
  return LayerParams(Tensor({in, out}), Tensor({out}));
}

Tensor linear(const Tensor& x, const LayerParams& p) {
  const std::size_t in = p.weight.dim(0);
  const std::size_t out = p.weight.dim(1);
  if (x.cols() != in) {
    throw DimensionError("linear: input has " + std::to_string(x.cols()) +
                         " features, layer expects " + std::to_string(in));
  }
  const std::size_t n = x.rows();
  Tensor y({n, out});
  kernels::fast::matmul(x.data(), p.weight.data(), y.data(), n, in, out);
  for (std::size_t i = 0; i < n; ++i) {
    double* yi = y.data() + i * out;
    for (std::size_t j = 0; j < out; ++j) yi[j] += p.bias[j];
  }
  return y;
}

Tensor linear_backward(const Tensor& x, const Tensor& dy, LayerParams& p) {
  const std::size_t in = p.weight.dim(0);
  const std::size_t out = p.weight.dim(1);
  const std::size_t n = x.rows();
  if (x.cols() != in || dy.cols() != out || dy.rows() != n) {
    throw DimensionError("linear_backward: shape mismatch");
  }
  kernels::fast::matmul_tn(x.data(), dy.data(), p.grad_weight.data(), in, n,
                           out, true);
  kernels::fast::column_sum(dy.data(), p.grad_bias.data(), n, out, true);
  Tensor dx({n, in});
  kernels::fast::matmul_nt(dy.data(), p.weight.data(), dx.data(), n, out, in);
  return dx;
}

double softplus(double x) {
  // log1p(exp(x)) without overflow for large x.
  return x > 30.0 ? x : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor elu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) v = v > 0.0 ? v : std::expm1(v);
  return y;
}

Tensor elu_backward(const Tensor& y, const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (y[i] <= 0.0) dx[i] *= y[i] + 1.0;
  }
  return dx;
}

LayerParams make_conv1d(std::size_t in, std::size_t out, std::size_t kernel) {
  if (kernel == 0 || kernel % 2 == 0) {
    throw DimensionError("conv1d: kernel size must be odd, got " +
                         std::to_string(kernel));
  }
  return LayerParams(Tensor({kernel * in, out}), Tensor({out}));
}

std::size_t conv_kernel(const LayerParams& p, std::size_t in_channels) {
  if (in_channels == 0 || p.weight.dim(0) % in_channels != 0) {
    throw DimensionError("conv1d: weight rows not a multiple of channels");
  }
  return p.weight.dim(0) / in_channels;
}

namespace {

void check_sequence(const Tensor& x, std::size_t steps, std::size_t kernel) {
  if (steps == 0 || x.rows() % steps != 0) {
    throw DimensionError("conv1d: " + std::to_string(x.rows()) +
                         " rows is not a whole number of " +
                         std::to_string(steps) + "-step sequences");
  }
  if (steps < kernel) {
    throw InputTooShortError("conv1d: sequence of " + std::to_string(steps) +
                             " steps is shorter than kernel " +
                             std::to_string(kernel));
  }
}

Tensor im2col(const Tensor& x, std::size_t steps, std::size_t kernel) {
  const std::size_t cin = x.cols();
  const std::size_t rows = x.rows();
  const std::size_t batch = rows / steps;
  const auto pad = static_cast<std::ptrdiff_t>((kernel - 1) / 2);
  Tensor col({rows, kernel * cin});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      double* dst = col.data() + (b * steps + t) * kernel * cin;
      for (std::size_t j = 0; j < kernel; ++j) {
        const auto src_t =
            static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(j) -
            pad;
        if (src_t < 0 || src_t >= static_cast<std::ptrdiff_t>(steps)) continue;
        const double* src =
            x.data() + (b * steps + static_cast<std::size_t>(src_t)) * cin;
        std::copy(src, src + cin, dst + j * cin);
      }
    }
  }
  return col;
}

}  // namespace

Tensor conv1d(const Tensor& x, std::size_t steps, const LayerParams& p) {
  const std::size_t cin = x.cols();
  const std::size_t kernel = conv_kernel(p, cin);
  check_sequence(x, steps, kernel);
  if (kernel == 1) return linear(x, p);
  return linear(im2col(x, steps, kernel), p);
}

Tensor conv1d_backward(const Tensor& x, std::size_t steps, const Tensor& dy,
                       LayerParams& p) {
  const std::size_t cin = x.cols();
  const std::size_t kernel = conv_kernel(p, cin);
  check_sequence(x, steps, kernel);
  if (kernel == 1) return linear_backward(x, dy, p);

  const Tensor col = im2col(x, steps, kernel);
  const Tensor dcol = linear_backward(col, dy, p);

  const std::size_t rows = x.rows();
  const std::size_t batch = rows / steps;
  const auto pad = static_cast<std::ptrdiff_t>((kernel - 1) / 2);
  Tensor dx({rows, cin});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      const double* src = dcol.data() + (b * steps + t) * kernel * cin;
      for (std::size_t j = 0; j < kernel; ++j) {
        const auto dst_t =
            static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(j) -
            pad;
        if (dst_t < 0 || dst_t >= static_cast<std::ptrdiff_t>(steps)) continue;
        double* dst =
            dx.data() + (b * steps + static_cast<std::size_t>(dst_t)) * cin;
        for (std::size_t c = 0; c < cin; ++c) dst[c] += src[j * cin + c];
      }
    }
  }
  return dx;
}

ResidualBlock ResidualBlock::make(std::size_t in, std::size_t out,
                                  std::size_t kernel) {
  ResidualBlock b;
  b.kernel = kernel;
  b.conv_a = make_conv1d(in, out, kernel);
  b.conv_b = make_conv1d(out, out, kernel);
  b.proj = make_linear(in, out);
  return b;
}

Tensor ResidualBlock::forward(const Tensor& x, std::size_t steps,
                              Cache* cache) const {
  Tensor hidden = elu(conv1d(x, steps, conv_a));
  Tensor y = conv1d(hidden, steps, conv_b);
  const Tensor skip = linear(x, proj);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += skip[i];
  if (cache) {
    cache->x = x;
    cache->hidden = std::move(hidden);
    cache->steps = steps;
  }
  return y;
}

Tensor ResidualBlock::backward(const Cache& cache, const Tensor& dy) {
  Tensor dhidden = conv1d_backward(cache.hidden, cache.steps, dy, conv_b);
  dhidden = elu_backward(cache.hidden, dhidden);
  Tensor dx = conv1d_backward(cache.x, cache.steps, dhidden, conv_a);
  const Tensor dskip = linear_backward(cache.x, dy, proj);
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dskip[i];
  return dx;
}

void ResidualBlock::init(Rng& rng) {
  const std::size_t in = in_channels();
  const std::size_t out = out_channels();
  init_glorot(conv_a, kernel * in, out, rng);
  // Second conv starts small so each block begins close to its projection.
  init_glorot(conv_b, kernel * out, out, rng, 0.5);
  init_glorot(proj, in, out, rng);
}

void ResidualBlock::append_params(ParamList& list, const std::string& prefix) {
  nn::append_params(list, prefix + ".conv_a", conv_a);
  nn::append_params(list, prefix + ".conv_b", conv_b);
  nn::append_params(list, prefix + ".proj", proj);
}

Tensor conv1d_residual_block(const Tensor& x, const ResidualBlock& block) {
  if (x.rank() != 2) {
    throw DimensionError("conv1d_residual_block: expected [time x channels]");
  }
  return block.forward(x, x.rows());
}

}  // namespace agility::nn
