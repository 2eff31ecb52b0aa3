#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace agility::experiments {

struct LatencyConfig {
  std::vector<std::size_t> histories{10, 100, 1000};
  std::size_t steps = 1000;   // timed steps per history length
  std::size_t warmup = 100;   // discarded steps before timing
  std::size_t input_dim = 64;
  std::size_t state_dim = 64;
  std::size_t output_dim = 64;
  std::size_t key_dim = 64;

  void validate() const;
};

struct StepTiming {
  std::string model;  // "ssm" or "attention"
  std::size_t history = 0;
  double median_us = 0.0;
  double p99_us = 0.0;
  double mean_us = 0.0;
  std::vector<double> samples_us;  // the timed steps, warmup excluded
};

struct MachineInfo {
  std::string compiler;
  unsigned hardware_threads = 0;
  int threads_used = 1;
};

struct LatencyResult {
  std::vector<StepTiming> timings;
  MachineInfo machine;
  std::size_t warmup_discarded = 0;

  const StepTiming& find(const std::string& model, std::size_t history) const;
  /// median(largest history) / median(smallest history).
  double median_ratio(const std::string& model) const;
};

/// Per-step latency of ssm_step against an attention baseline that, every
/// step, projects the last `history` frames to keys and values and attends
/// to them with the current frame's query. Runs on one thread on a steady clock.
/// Inputs are seeded so only timings vary between runs.
LatencyResult run_latency(const LatencyConfig& cfg, std::uint64_t seed);

}  // namespace agility::experiments
