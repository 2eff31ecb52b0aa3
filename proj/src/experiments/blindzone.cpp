#include "agility/experiments/blindzone.hpp"

#include <cmath>
#include <numbers>

#include "agility/error.hpp"
#include "agility/nn/adam.hpp"
#include "agility/random.hpp"
#include "agility/sim/generator.hpp"
#include "agility/ssm/terrain_memory.hpp"

namespace agility::experiments {

using nn::Tensor;

sim::SimConfig blindzone_sim_defaults() {
  sim::SimConfig c;
  c.duration = 8.0;
  c.forward_speed = {0.8, 1.2};
  c.lateral_speed = {0.0, 0.0};
  c.yaw_rate = {0.0, 0.0};
  c.push_velocity = {-0.2, 0.2};
  return c;
}

void BlindZoneConfig::validate() const {
  sim.validate();
  terrain.validate();
  if (train_episodes == 0 || val_episodes == 0 || batch_episodes == 0) {
    throw ConfigError("blindzone: episode counts must be positive");
  }
  if (!(window >= 0) || !(score_window > 0)) {
    throw ConfigError("blindzone: window must be >= 0 and score_window > 0");
  }
  if (state_dim == 0 || ssm_output == 0 || mlp_width == 0 || scan.samples == 0) {
    throw ConfigError("blindzone: layer sizes must be positive");
  }
  if (!(learning_rate > 0) || !(final_lr_fraction > 0) || final_lr_fraction > 1) {
    throw ConfigError("blindzone: learning rate must be positive, final fraction in (0, 1]");
  }
  if (speed_noise < 0) throw ConfigError("blindzone: speed_noise must be >= 0");
}

namespace {

struct Episode {
  Tensor inputs;   // [T x in]
  Tensor truth;    // [T x samples]
  std::vector<bool> scored;
};

std::vector<Episode> make_episodes(const BlindZoneConfig& cfg, std::uint64_t seed,
                                   std::uint32_t first, std::size_t count) {
  std::vector<Episode> out;
  sim::CorruptionSpec corruption;
  corruption.mode = sim::CorruptionMode::blind_zone;
  corruption.window = cfg.window;
  for (std::size_t i = 0; i < count; ++i) {
    const auto ep = static_cast<std::uint32_t>(first + i);
    const auto traj = sim::generate_trajectory(seed, ep, cfg.sim);
    const auto terrain = sim::generate_terrain(seed * 1000003ULL + ep, cfg.terrain_kind, cfg.terrain);
    const auto stream = sim::terrain_feature_stream(traj, terrain, corruption, seed + ep, cfg.scan);
    Rng rng = fork(seed, 0xb11d0000ULL + ep);
    std::vector<double> speed;
    speed.reserve(traj.frames.size());
    for (const auto& f : traj.frames) {
      speed.push_back(f.v_gt[0] + (cfg.speed_noise > 0 ? uniform(rng, -cfg.speed_noise, cfg.speed_noise) : 0.0));
    }
    Episode e{ssm::memory_inputs(stream, speed), stream.truth, {}};
    for (const auto& f : traj.frames) e.scored.push_back(sim::in_blind_zone(terrain, f.x, cfg.score_window));
    out.push_back(std::move(e));
  }
  return out;
}

// Stacks episodes [begin, begin + batch) time-major.
void stack(const std::vector<Episode>& eps, std::size_t begin, std::size_t batch, Tensor& x,
           Tensor& y) {
  const std::size_t steps = eps[begin].inputs.rows();
  const std::size_t in = eps[begin].inputs.cols();
  const std::size_t out = eps[begin].truth.cols();
  x = Tensor({steps * batch, in});
  y = Tensor({steps * batch, out});
  for (std::size_t b = 0; b < batch; ++b) {
    const Episode& e = eps[begin + b];
    if (e.inputs.rows() != steps) throw DimensionError("blindzone: episodes differ in length");
    for (std::size_t t = 0; t < steps; ++t) {
      std::copy(e.inputs.row(t).begin(), e.inputs.row(t).end(), x.row(t * batch + b).begin());
      std::copy(e.truth.row(t).begin(), e.truth.row(t).end(), y.row(t * batch + b).begin());
    }
  }
}

template <typename Model>
std::vector<double> train(Model& model, const std::vector<Episode>& eps,
                          const BlindZoneConfig& cfg, Rng& rng) {
  nn::ParamList params = model.params();
  nn::AdamState adam(params, {cfg.learning_rate});
  std::vector<std::size_t> order(eps.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t per_epoch = (eps.size() + cfg.batch_episodes - 1) / cfg.batch_episodes;
  const std::size_t total = per_epoch * cfg.epochs;
  std::size_t step = 0;
  std::vector<double> curve;
  std::vector<Episode> shuffled;
  typename Model::Cache cache;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    shuffled.clear();
    for (std::size_t i : order) shuffled.push_back(eps[i]);
    double sse = 0;
    double count = 0;
    for (std::size_t begin = 0; begin < shuffled.size(); begin += cfg.batch_episodes) {
      const std::size_t batch = std::min(cfg.batch_episodes, shuffled.size() - begin);
      Tensor x, y;
      stack(shuffled, begin, batch, x, y);
      const Tensor pred = model.forward(x, batch, &cache);
      Tensor d = pred;
      double batch_sse = 0;
      const double n = static_cast<double>(pred.size());
      for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = pred[i] - y[i];
        batch_sse += e * e;
        d[i] = 2.0 * e / n;
      }
      if (!std::isfinite(batch_sse)) throw NumericError("blindzone: non-finite loss", step + 1);
      sse += batch_sse;
      count += n;
      nn::zero_grads(params);
      model.backward(cache, d);
      const double progress = static_cast<double>(step) / static_cast<double>(total);
      const double floor = cfg.final_lr_fraction;
      adam.config.lr = cfg.learning_rate *
                       (floor + (1 - floor) * 0.5 * (1 + std::cos(std::numbers::pi * progress)));
      nn::adam_step(params, adam);
      ++step;
    }
    curve.push_back(sse / count);
  }
  return curve;
}

template <typename Model>
void score(const Model& model, const std::vector<Episode>& eps, double& scored_rmse,
           double& all_rmse, std::size_t& scored_frames) {
  double sse_scored = 0, n_scored = 0, sse_all = 0, n_all = 0;
  for (const auto& e : eps) {
    const Tensor pred = model.forward(e.inputs, 1);
    const std::size_t s = e.truth.cols();
    for (std::size_t t = 0; t < e.truth.rows(); ++t) {
      double row = 0;
      for (std::size_t j = 0; j < s; ++j) {
        const double d = pred.at(t, j) - e.truth.at(t, j);
        row += d * d;
      }
      sse_all += row;
      n_all += static_cast<double>(s);
      if (e.scored[t]) {
        sse_scored += row;
        n_scored += static_cast<double>(s);
      }
    }
  }
  if (n_scored == 0) throw Error("blindzone: no validation frame lies before an obstacle");
  scored_rmse = std::sqrt(sse_scored / n_scored);
  all_rmse = std::sqrt(sse_all / n_all);
  scored_frames = static_cast<std::size_t>(n_scored) / eps.front().truth.cols();
}

}  // namespace

BlindZoneResult run_blindzone(const BlindZoneConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto train_eps = make_episodes(cfg, seed, 0, cfg.train_episodes);
  const auto val_eps = make_episodes(cfg, seed, 1u << 20, cfg.val_episodes);
  const std::size_t in = ssm::memory_input_dim(cfg.scan.samples);

  BlindZoneResult r;
  Rng init_rng = fork(seed, 0x55e);
  auto memory = ssm::TerrainMemoryModel::make(in, cfg.state_dim, cfg.ssm_output, cfg.scan.samples,
                                              init_rng);
  auto memoryless = ssm::MemorylessModel::make(in, cfg.mlp_width, cfg.scan.samples, init_rng);
  Rng rng_a = fork(seed, 0x5a);
  Rng rng_b = fork(seed, 0x5a);  // same episode order for both models
  r.ssm_curve = train(memory, train_eps, cfg, rng_a);
  r.memoryless_curve = train(memoryless, train_eps, cfg, rng_b);
  std::size_t frames = 0;
  score(memory, val_eps, r.ssm_rmse, r.ssm_rmse_all, frames);
  score(memoryless, val_eps, r.memoryless_rmse, r.memoryless_rmse_all, r.scored_frames);
  return r;
}

}  // namespace agility::experiments
