#include "agility/experiments/latency.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include <omp.h>

#include "agility/error.hpp"
#include "agility/nn/attention.hpp"
#include "agility/random.hpp"
#include "agility/ssm/ssm.hpp"

namespace agility::experiments {

using nn::Tensor;

void LatencyConfig::validate() const {
  if (histories.empty()) throw ConfigError("bench.histories must not be empty");
  for (std::size_t h : histories) {
    if (h == 0) throw ConfigError("bench.histories entries must be positive");
  }
  if (steps == 0) throw ConfigError("bench.steps must be positive");
  if (input_dim == 0 || state_dim == 0 || output_dim == 0 || key_dim == 0) {
    throw ConfigError("bench layer sizes must be positive");
  }
}

const StepTiming& LatencyResult::find(const std::string& model, std::size_t history) const {
  for (const auto& t : timings) {
    if (t.model == model && t.history == history) return t;
  }
  throw Error("latency: no timing for " + model + " at history " + std::to_string(history));
}

double LatencyResult::median_ratio(const std::string& model) const {
  std::size_t lo = 0, hi = 0;
  bool any = false;
  for (const auto& t : timings) {
    if (t.model != model) continue;
    if (!any || t.history < lo) lo = t.history;
    if (!any || t.history > hi) hi = t.history;
    any = true;
  }
  if (!any) throw Error("latency: no timings for " + model);
  return find(model, hi).median_us / find(model, lo).median_us;
}

namespace {

using Clock = std::chrono::steady_clock;

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const std::size_t j = std::min(i + 1, v.size() - 1);
  return v[i] + (pos - static_cast<double>(i)) * (v[j] - v[i]);
}

StepTiming summarize(std::string model, std::size_t history, std::vector<double> samples) {
  StepTiming t{std::move(model), history, quantile(samples, 0.5), quantile(samples, 0.99), 0.0,
               {}};
  for (double s : samples) t.mean_us += s / static_cast<double>(samples.size());
  t.samples_us = std::move(samples);
  return t;
}

Tensor random_input(Rng& rng, std::size_t dim) {
  Tensor x({dim});
  for (std::size_t i = 0; i < dim; ++i) x[i] = normal(rng, 0.0, 1.0);
  return x;
}

// Elapsed microseconds of `step` for each of warmup + steps calls, warmup dropped.
template <typename Step>
std::vector<double> time_steps(const LatencyConfig& cfg, Step&& step) {
  std::vector<double> out;
  out.reserve(cfg.steps);
  for (std::size_t i = 0; i < cfg.warmup + cfg.steps; ++i) {
    const auto t0 = Clock::now();
    step();
    const auto t1 = Clock::now();
    if (i >= cfg.warmup) out.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
  }
  return out;
}

// Inputs are drawn up front so the clock covers the model alone.
std::vector<Tensor> input_pool(Rng& rng, std::size_t dim) {
  std::vector<Tensor> pool;
  for (int i = 0; i < 64; ++i) pool.push_back(random_input(rng, dim));
  return pool;
}

}  // namespace

LatencyResult run_latency(const LatencyConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  LatencyResult result;
  result.warmup_discarded = cfg.warmup;
#if defined(__clang__)
  result.machine.compiler = "clang " __clang_version__;
#elif defined(__GNUC__)
  result.machine.compiler = "gcc " __VERSION__;
#endif
  result.machine.hardware_threads = std::thread::hardware_concurrency();
  const int saved_threads = omp_get_max_threads();
  omp_set_num_threads(1);

  Rng rng = fork(seed, 0x1a7e);
  auto layer = ssm::SsmLayer::make(cfg.input_dim, cfg.state_dim, cfg.output_dim);
  layer.init(rng);
  auto attention =
      nn::CrossModalAttention::make(cfg.input_dim, cfg.input_dim, cfg.key_dim, cfg.output_dim);
  attention.init(rng);
  const auto pool = input_pool(rng, cfg.input_dim);
  double sink = 0.0;

  for (std::size_t history : cfg.histories) {
    // SSM: advance to step `history`, then time steps from there on.
    ssm::SsmState state = layer.initial_state();
    for (std::size_t i = 0; i < history; ++i) state = ssm::ssm_step(layer, state, pool[i % 64]).state;
    std::size_t k = 0;
    auto ssm_samples = time_steps(cfg, [&] {
      auto r = ssm::ssm_step(layer, state, pool[k++ % 64]);
      state = std::move(r.state);
      sink += r.y[0];
    });
    result.timings.push_back(summarize("ssm", history, std::move(ssm_samples)));

    // Attention: ring buffer of the last `history` frames, all re-projected each step.
    Tensor window({history, cfg.input_dim});
    for (std::size_t i = 0; i < history; ++i) {
      std::copy(pool[i % 64].storage().begin(), pool[i % 64].storage().end(), window.row(i).begin());
    }
    std::size_t slot = 0;
    k = 0;
    auto att_samples = time_steps(cfg, [&] {
      const Tensor& x = pool[k++ % 64];
      std::copy(x.storage().begin(), x.storage().end(), window.row(slot).begin());
      slot = (slot + 1) % history;
      const Tensor q = x.reshaped({1, cfg.input_dim});
      const Tensor out = attention.forward(q, window);
      sink += out[0];
    });
    result.timings.push_back(summarize("attention", history, std::move(att_samples)));
  }
  omp_set_num_threads(saved_threads);
  if (!std::isfinite(sink)) throw NumericError("latency: non-finite model output");
  return result;
}

}  // namespace agility::experiments
