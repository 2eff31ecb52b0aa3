#pragma once

#include <cstdint>
#include <vector>

#include "agility/sim/config.hpp"
#include "agility/sim/features.hpp"
#include "agility/sim/terrain.hpp"

namespace agility::experiments {

/// Forward walking over obstacle courses, tuned so an episode stays on its
/// terrain: roughly 1 m/s for 8 s with no lateral or yaw commands.
sim::SimConfig blindzone_sim_defaults();

struct BlindZoneConfig {
  sim::SimConfig sim = blindzone_sim_defaults();
  sim::TerrainConfig terrain{.length = 18.0};
  sim::TerrainKind terrain_kind = sim::TerrainKind::mixed;
  sim::ScanConfig scan;
  std::size_t train_episodes = 48;
  std::size_t val_episodes = 16;
  double window = 1.0;        // vision masked this far before each obstacle, m
  double score_window = 1.0;  // frames scored: obstacle within this distance, m
  double speed_noise = 0.05;  // forward-speed measurement half-width, m/s
  std::size_t state_dim = 64;
  std::size_t ssm_output = 64;
  std::size_t mlp_width = 64;
  std::size_t epochs = 120;
  std::size_t batch_episodes = 2;
  double learning_rate = 3e-3;
  double final_lr_fraction = 0.1;

  void validate() const;
};

struct BlindZoneResult {
  double ssm_rmse = 0.0;         // on scored validation frames
  double memoryless_rmse = 0.0;
  double ssm_rmse_all = 0.0;     // on every validation frame
  double memoryless_rmse_all = 0.0;
  std::size_t scored_frames = 0;
  std::vector<double> ssm_curve;         // training MSE per epoch
  std::vector<double> memoryless_curve;

  /// Relative reduction 1 - ssm / memoryless.
  double improvement() const { return 1.0 - ssm_rmse / memoryless_rmse; }
};

/// Trains the SSM terrain memory and the memoryless baseline on identical
/// corrupted streams and scores height reconstruction on validation frames
/// whose body is within `score_window` before an obstacle.
BlindZoneResult run_blindzone(const BlindZoneConfig& cfg, std::uint64_t seed);

}  // namespace agility::experiments
