#include "agility/estimator/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "agility/error.hpp"
#include "agility/estimator/loss.hpp"
#include "agility/nn/adam.hpp"

namespace agility::estimator {

using nn::Tensor;

Split split_by_episode(const sim::Dataset& ds, double train_fraction) {
  if (!(train_fraction > 0 && train_fraction < 1)) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
  const auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(ds.size())));
  Split s;
  for (std::size_t i = 0; i < ds.size(); ++i) (i < n_train ? s.train : s.val).push_back(ds[i]);
  return s;
}

namespace {

struct Sample {
  std::size_t episode;
  std::size_t frame;
};

struct Accumulator {
  sim::Vec3 sq{};
  std::size_t n = 0;

  void add(const sim::Vec3& truth, const sim::Vec3& pred) {
    for (int i = 0; i < 3; ++i) sq[i] += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    ++n;
  }
  RmseReport report() const {
    RmseReport r;
    r.frames = n;
    if (n == 0) return r;
    double total = 0;
    for (int i = 0; i < 3; ++i) {
      r.per_axis[i] = std::sqrt(sq[i] / static_cast<double>(n));
      total += sq[i];
    }
    r.total = std::sqrt(total / (3.0 * static_cast<double>(n)));
    return r;
  }
};

void gather(const std::vector<Tensor>& feats, const std::vector<Sample>& samples,
            std::size_t begin, std::size_t batch, std::size_t w, Tensor& x) {
  for (std::size_t b = 0; b < batch; ++b) {
    const Sample& s = samples[begin + b];
    for (std::size_t k = 0; k < w; ++k) {
      const auto src = feats[s.episode].row(s.frame + k + 1 - w);
      std::copy(src.begin(), src.end(), x.row(b * w + k).begin());
    }
  }
}

}  // namespace

TrainResult train_estimator(const EstimatorConfig& cfg, const sim::Dataset& train,
                            const sim::Dataset& val) {
  cfg.validate();
  if (train.empty()) throw Error("train_estimator: empty training set");
  Rng rng = fork(cfg.seed, 0xe57);
  TrainResult result{VelocityNet(cfg, rng), {}, {}, 0};
  VelocityNet& net = result.net;
  net.normalizer = Normalizer::fit(train);

  std::vector<Tensor> feats;
  std::vector<Sample> samples;
  for (std::size_t e = 0; e < train.size(); ++e) {
    feats.push_back(net.normalizer.apply(train[e]));
    for (std::size_t f = cfg.first_frame; f < train[e].frames.size(); ++f) {
      samples.push_back({e, f});
    }
  }
  if (samples.empty()) throw Error("train_estimator: no frames after first_frame");

  const std::size_t per_epoch =
      cfg.samples_per_epoch == 0 ? samples.size() : std::min(cfg.samples_per_epoch, samples.size());
  const std::size_t batches_per_epoch = (per_epoch + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total_steps = batches_per_epoch * cfg.epochs;

  nn::ParamList params = net.params();
  nn::AdamState adam(params, {cfg.learning_rate});
  const std::size_t w = cfg.window;
  const std::size_t outs = net.outputs();
  VelocityNet::Cache cache;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(samples.begin(), samples.end(), rng);
    double loss_sum = 0;
    Accumulator acc;
    for (std::size_t begin = 0; begin < per_epoch; begin += cfg.batch_size) {
      const std::size_t batch = std::min(cfg.batch_size, per_epoch - begin);
      Tensor x({batch * w, kFeatureDim});
      gather(feats, samples, begin, batch, w, x);
      const Tensor out = net.forward(x, batch, &cache);
      Tensor d_out({batch, outs});
      double loss = 0;
      for (std::size_t b = 0; b < batch; ++b) {
        const Sample& s = samples[begin + b];
        const sim::Vec3& truth = train[s.episode].frames[s.frame].v_gt;
        const auto row = out.row(b);
        const sim::Vec3 v{row[0], row[1], row[2]};
        acc.add(truth, v);
        auto d = d_out.row(b);
        if (net.has_sigma_head()) {
          const auto g = huber_gaussian_grad(truth, v, {row[3], row[4], row[5]},
                                             cfg.huber_delta, cfg.nll_weight);
          loss += g.loss;
          for (int i = 0; i < 3; ++i) {
            d[i] = g.d_v_net[i] / static_cast<double>(batch);
            d[3 + i] = g.d_raw_sigma[i] / static_cast<double>(batch);
          }
        } else {
          const auto g = huber_gaussian_grad(truth, v, {0, 0, 0}, cfg.huber_delta, 0.0);
          loss += g.loss;
          for (int i = 0; i < 3; ++i) d[i] = g.d_v_net[i] / static_cast<double>(batch);
        }
      }
      loss /= static_cast<double>(batch);
      if (!std::isfinite(loss)) {
        throw NumericError("train_estimator: non-finite loss", result.steps + 1);
      }
      loss_sum += loss * static_cast<double>(batch);
      nn::zero_grads(params);
      net.backward(cache, d_out);
      const double progress = static_cast<double>(result.steps) / static_cast<double>(total_steps);
      const double floor = cfg.final_lr_fraction;
      adam.config.lr = cfg.learning_rate *
                       (floor + (1 - floor) * 0.5 * (1 + std::cos(std::numbers::pi * progress)));
      nn::adam_step(params, adam);
      ++result.steps;
    }
    EpochMetrics m;
    m.epoch = epoch + 1;
    m.train_loss = loss_sum / static_cast<double>(per_epoch);
    m.train_rmse = acc.report().total;
    m.val_rmse = val.empty() ? 0.0 : eval_rmse(net, val, false).total;
    result.curve.push_back(m);
  }

  if (!net.has_sigma_head()) {
    Accumulator acc;
    for (const auto& traj : train) {
      const auto est = predict_trajectory(net, traj, cfg.first_frame);
      for (std::size_t k = 0; k < est.size(); ++k) {
        acc.add(traj.frames[cfg.first_frame + k].v_gt, est[k].v_net);
      }
    }
    for (int i = 0; i < 3; ++i) {
      net.fixed_sigma[i] =
          std::max(acc.sq[i] / static_cast<double>(std::max<std::size_t>(acc.n, 1)), kSigmaFloor);
    }
  }
  if (!val.empty()) result.val = eval_rmse(net, val, false);
  return result;
}

MeasurementSource network_source(const VelocityNet& net) {
  return [&net](const sim::Trajectory& traj, std::size_t first) {
    return predict_trajectory(net, traj, first);
  };
}

MeasurementSource oracle_source(double sigma) {
  return [sigma](const sim::Trajectory& traj, std::size_t first) {
    std::vector<VelocityEstimate> out;
    for (std::size_t k = first; k < traj.frames.size(); ++k) {
      out.push_back({traj.frames[k].v_gt, {sigma, sigma, sigma}});
    }
    return out;
  };
}

RmseReport eval_rmse(const MeasurementSource& source, const sim::Dataset& ds, bool with_ekf,
                     std::size_t first_frame, const ekf::EkfConfig& ekf_cfg) {
  if (ds.empty()) throw Error("eval_rmse: empty dataset");
  Accumulator acc;
  for (const auto& traj : ds) {
    if (traj.frames.size() <= first_frame) continue;
    const auto est = source(traj, first_frame);
    if (with_ekf) {
      const std::vector<sim::ProprioFrame> frames(traj.frames.begin() + first_frame,
                                                  traj.frames.end());
      const auto steps = ekf::run_filter(frames, est, ekf_cfg);
      for (const auto& s : steps) acc.add(s.v_gt, s.v_fused);
    } else {
      for (std::size_t k = 0; k < est.size(); ++k) {
        acc.add(traj.frames[first_frame + k].v_gt, est[k].v_net);
      }
    }
  }
  if (acc.n == 0) throw Error("eval_rmse: no frames to score");
  return acc.report();
}

RmseReport eval_rmse(const VelocityNet& net, const sim::Dataset& ds, bool with_ekf,
                     const ekf::EkfConfig& ekf_cfg) {
  return eval_rmse(network_source(net), ds, with_ekf, net.config().first_frame, ekf_cfg);
}

SigmaCalibration sigma_calibration(const VelocityNet& net, const sim::Dataset& ds) {
  SigmaCalibration c;
  const std::size_t first = net.config().first_frame;
  for (const auto& traj : ds) {
    if (traj.frames.size() <= first) continue;
    const auto est = predict_trajectory(net, traj, first);
    for (std::size_t k = 0; k < est.size(); ++k) {
      const double s = (est[k].sigma[0] + est[k].sigma[1] + est[k].sigma[2]) / 3.0;
      if (traj.frames[first + k].event == sim::Event::nominal) {
        c.nominal_mean += s;
        ++c.nominal_frames;
      } else {
        c.event_mean += s;
        ++c.event_frames;
      }
    }
  }
  if (c.event_frames) c.event_mean /= static_cast<double>(c.event_frames);
  if (c.nominal_frames) c.nominal_mean /= static_cast<double>(c.nominal_frames);
  return c;
}

}  // namespace agility::estimator
