#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "agility/experiments/blindzone.hpp"
#include "agility/experiments/gating_compare.hpp"
#include "agility/experiments/latency.hpp"
#include "agility/experiments/table6.hpp"
#include "agility/sim/config.hpp"

namespace agility::cli {

enum class Command { simulate, table6, blindzone, bench_latency, gating };

std::string to_string(Command c);
/// Throws ConfigError for an unknown command name.
Command command_from_string(const std::string& s);

/// The resolved parameters of one run. Only the blocks of `command` are read
/// or written; the others keep their defaults.
struct RunConfig {
  Command command = Command::simulate;
  std::uint64_t seed = 0;
  std::string out = "out";

  sim::SimConfig simulate;
  experiments::Table6Config table6;
  experiments::BlindZoneConfig blindzone;
  std::size_t blindzone_seeds = 5;  // consecutive seeds from the run seed
  bool blindzone_control = true;    // also run with the window set to 0 m
  experiments::LatencyConfig bench;
  experiments::GatingCompareConfig gating;

  void validate() const;
};

/// Builds a config from a JSON object. Accepted top-level keys are "seed",
/// "out" and the blocks of the command:
///   simulate       sim
///   table6         sim, estimator, ekf, table6
///   blindzone      sim, terrain, scan, ssm, blindzone
///   bench-latency  bench
///   gating         gating, distill
/// Any other key, at any depth, throws ConfigError naming its path, as does a
/// value of the wrong type.
RunConfig parse_run_config(Command command, const nlohmann::json& j);

/// Fully resolved config, every field present.
nlohmann::json to_json(const RunConfig& cfg);

/// FNV-1a 64-bit hash of the canonical (sorted-key, compact) JSON dump, as 16
/// hex digits.
std::string config_hash(const nlohmann::json& j);

}  // namespace agility::cli
