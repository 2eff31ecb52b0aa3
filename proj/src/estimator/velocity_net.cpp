#include "agility/estimator/velocity_net.hpp"

#include <cmath>

#include "agility/error.hpp"
#include "agility/estimator/loss.hpp"

namespace agility::estimator {

using nn::Tensor;

std::string to_string(Architecture a) {
  return a == Architecture::mlp ? "mlp" : "resnet1d";
}

Architecture architecture_from_string(const std::string& s) {
  if (s == "mlp") return Architecture::mlp;
  if (s == "resnet1d") return Architecture::resnet1d;
  throw ConfigError("unknown architecture '" + s + "'");
}

void EstimatorConfig::validate() const {
  if (window < 1) throw ConfigError("estimator.window must be >= 1");
  if (!(huber_delta > 0)) throw ConfigError("estimator.huber_delta must be positive");
  if (!(nll_weight >= 0)) throw ConfigError("estimator.nll_weight must be >= 0");
  if (first_frame + 1 < window) {
    throw ConfigError("estimator.first_frame must be at least window - 1");
  }
  if (batch_size < 1 || mlp_hidden < 1 || channels < 1 || blocks < 1) {
    throw ConfigError("estimator: layer sizes and batch size must be positive");
  }
  if (!(learning_rate > 0) || !(final_lr_fraction > 0) || final_lr_fraction > 1) {
    throw ConfigError("estimator: learning rate must be positive, final fraction in (0, 1]");
  }
}

void frame_features(const sim::ProprioFrame& f, std::span<double> out) {
  if (out.size() != kFeatureDim) throw DimensionError("frame_features: wrong buffer size");
  std::size_t k = 0;
  for (double v : f.a_imu) out[k++] = v;
  for (double v : f.omega_imu) out[k++] = v;
  for (double v : f.gravity) out[k++] = v;
  for (double v : f.joint_pos) out[k++] = v;
  for (double v : f.joint_vel) out[k++] = v;
  for (bool c : f.contact) out[k++] = c ? 1.0 : 0.0;
}

Normalizer Normalizer::fit(const sim::Dataset& ds) {
  Normalizer n;
  std::vector<double> sum(kFeatureDim, 0.0), sq(kFeatureDim, 0.0), buf(kFeatureDim);
  double count = 0;
  for (const auto& traj : ds) {
    for (const auto& f : traj.frames) {
      frame_features(f, buf);
      for (std::size_t i = 0; i < kFeatureDim; ++i) {
        sum[i] += buf[i];
        sq[i] += buf[i] * buf[i];
      }
      count += 1;
    }
  }
  if (count == 0) return n;
  for (std::size_t i = 0; i < kFeatureDim; ++i) {
    n.mean[i] = sum[i] / count;
    const double var = sq[i] / count - n.mean[i] * n.mean[i];
    n.scale[i] = var > 1e-12 ? 1.0 / std::sqrt(var) : 1.0;
  }
  return n;
}

Tensor Normalizer::apply(const sim::Trajectory& traj) const {
  Tensor out({traj.frames.size(), kFeatureDim});
  for (std::size_t r = 0; r < traj.frames.size(); ++r) {
    auto row = out.row(r);
    frame_features(traj.frames[r], row);
    for (std::size_t i = 0; i < kFeatureDim; ++i) row[i] = (row[i] - mean[i]) * scale[i];
  }
  return out;
}

VelocityNet::VelocityNet(const EstimatorConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  if (cfg_.arch == Architecture::mlp) {
    const std::size_t h = cfg_.mlp_hidden;
    mlp_ = {nn::make_linear(kFeatureDim, h), nn::make_linear(h, h), nn::make_linear(h, 3)};
    nn::init_glorot(mlp_[0], kFeatureDim, h, rng);
    nn::init_glorot(mlp_[1], h, h, rng);
  } else {
    const std::size_t kernel = cfg_.window >= 3 ? 3 : 1;
    std::size_t in = kFeatureDim;
    for (std::size_t b = 0; b < cfg_.blocks; ++b) {
      blocks_.push_back(nn::ResidualBlock::make(in, cfg_.channels, kernel));
      blocks_.back().init(rng);
      in = cfg_.channels;
    }
    head_ = nn::make_linear(2 * cfg_.channels, 6);
  }
}

Tensor VelocityNet::forward(const Tensor& x, std::size_t batch, Cache* cache) const {
  const std::size_t w = cfg_.window;
  if (x.rows() != batch * w || x.cols() != kFeatureDim) {
    throw DimensionError("VelocityNet: expected [" + std::to_string(batch * w) + " x " +
                         std::to_string(kFeatureDim) + "] input");
  }
  if (cache) {
    cache->batch = batch;
    cache->blocks.clear();
    cache->activations.clear();
  }
  if (cfg_.arch == Architecture::mlp) {
    Tensor last({batch, kFeatureDim});
    for (std::size_t b = 0; b < batch; ++b) {
      const auto src = x.row(b * w + w - 1);
      std::copy(src.begin(), src.end(), last.row(b).begin());
    }
    Tensor h1 = nn::elu(nn::linear(last, mlp_[0]));
    Tensor h2 = nn::elu(nn::linear(h1, mlp_[1]));
    Tensor out = nn::linear(h2, mlp_[2]);
    if (cache) {
      cache->input = std::move(last);
      cache->activations = {std::move(h1), std::move(h2)};
    }
    return out;
  }

  Tensor h = x;
  for (const auto& block : blocks_) {
    nn::ResidualBlock::Cache bc;
    Tensor z = block.forward(h, w, cache ? &bc : nullptr);
    h = nn::elu(z);
    if (cache) {
      cache->blocks.push_back(std::move(bc));
      cache->activations.push_back(h);
    }
  }
  const std::size_t c = cfg_.channels;
  Tensor pooled({batch, 2 * c});
  for (std::size_t b = 0; b < batch; ++b) {
    auto dst = pooled.row(b);
    const auto last = h.row(b * w + w - 1);
    for (std::size_t j = 0; j < c; ++j) dst[j] = last[j];
    for (std::size_t s = 0; s < w; ++s) {
      const auto r = h.row(b * w + s);
      for (std::size_t j = 0; j < c; ++j) dst[c + j] += r[j];
    }
    for (std::size_t j = 0; j < c; ++j) dst[c + j] /= static_cast<double>(w);
  }
  Tensor out = nn::linear(pooled, head_);
  if (cache) cache->pooled = std::move(pooled);
  return out;
}

Tensor VelocityNet::backward(const Cache& cache, const Tensor& d_out) {
  const std::size_t batch = cache.batch;
  const std::size_t w = cfg_.window;
  if (cfg_.arch == Architecture::mlp) {
    Tensor d = nn::linear_backward(cache.activations[1], d_out, mlp_[2]);
    d = nn::linear_backward(cache.activations[0],
                            nn::elu_backward(cache.activations[1], d), mlp_[1]);
    Tensor d_last = nn::linear_backward(
        cache.input, nn::elu_backward(cache.activations[0], d), mlp_[0]);
    Tensor dx({batch * w, kFeatureDim});
    for (std::size_t b = 0; b < batch; ++b) {
      const auto src = d_last.row(b);
      std::copy(src.begin(), src.end(), dx.row(b * w + w - 1).begin());
    }
    return dx;
  }

  const std::size_t c = cfg_.channels;
  const Tensor d_pooled = nn::linear_backward(cache.pooled, d_out, head_);
  Tensor dh({batch * w, c});
  for (std::size_t b = 0; b < batch; ++b) {
    const auto dp = d_pooled.row(b);
    for (std::size_t s = 0; s < w; ++s) {
      auto r = dh.row(b * w + s);
      for (std::size_t j = 0; j < c; ++j) r[j] = dp[c + j] / static_cast<double>(w);
    }
    auto last = dh.row(b * w + w - 1);
    for (std::size_t j = 0; j < c; ++j) last[j] += dp[j];
  }
  for (std::size_t i = blocks_.size(); i-- > 0;) {
    const Tensor dz = nn::elu_backward(cache.activations[i], dh);
    dh = blocks_[i].backward(cache.blocks[i], dz);
  }
  return dh;
}

VelocityEstimate VelocityNet::decode(std::span<const double> out) const {
  VelocityEstimate e;
  for (int i = 0; i < 3; ++i) e.v_net[i] = out[i];
  if (has_sigma_head()) {
    for (int i = 0; i < 3; ++i) e.sigma[i] = sigma_from_raw(out[3 + i]);
  } else {
    e.sigma = fixed_sigma;
  }
  return e;
}

nn::ParamList VelocityNet::params() {
  nn::ParamList list;
  for (std::size_t i = 0; i < mlp_.size(); ++i) {
    nn::append_params(list, "mlp." + std::to_string(i), mlp_[i]);
  }
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i].append_params(list, "block" + std::to_string(i));
  }
  if (has_sigma_head()) nn::append_params(list, "head", head_);
  return list;
}

VelocityEstimate predict_velocity(const VelocityNet& net,
                                  std::span<const sim::ProprioFrame> window) {
  const std::size_t w = net.config().window;
  if (window.size() != w) {
    throw DimensionError("predict_velocity: window of " + std::to_string(window.size()) +
                         " frames, network expects " + std::to_string(w));
  }
  sim::Trajectory traj;
  traj.frames.assign(window.begin(), window.end());
  const Tensor x = net.normalizer.apply(traj);
  const Tensor out = net.forward(x, 1);
  return net.decode(out.row(0));
}

std::vector<VelocityEstimate> predict_trajectory(const VelocityNet& net,
                                                 const sim::Trajectory& traj,
                                                 std::size_t first) {
  const std::size_t w = net.config().window;
  const std::size_t n = traj.frames.size();
  if (first + 1 < w) throw DimensionError("predict_trajectory: first frame precedes a full window");
  std::vector<VelocityEstimate> out;
  if (first >= n) return out;
  out.reserve(n - first);
  const Tensor feats = net.normalizer.apply(traj);
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = first; start < n; start += kChunk) {
    const std::size_t batch = std::min(kChunk, n - start);
    Tensor x({batch * w, kFeatureDim});
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t s = 0; s < w; ++s) {
        const auto src = feats.row(start + b + s + 1 - w);
        std::copy(src.begin(), src.end(), x.row(b * w + s).begin());
      }
    }
    const Tensor y = net.forward(x, batch);
    for (std::size_t b = 0; b < batch; ++b) out.push_back(net.decode(y.row(b)));
  }
  return out;
}

}  // namespace agility::estimator
