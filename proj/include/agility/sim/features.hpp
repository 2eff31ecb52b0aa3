#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agility/nn/tensor.hpp"
#include "agility/sim/terrain.hpp"
#include "agility/sim/types.hpp"

namespace agility::sim {

enum class CorruptionMode { none, frame_drop, gaussian_noise, fov_occlusion, blind_zone };

std::string to_string(CorruptionMode m);
CorruptionMode corruption_mode_from_string(const std::string& s);

struct CorruptionSpec {
  CorruptionMode mode = CorruptionMode::none;
  double drop_probability = 0.0;
  double noise_sigma = 0.0;         // m
  double occluded_fraction = 0.0;   // of the samples in each frame
  double window = 1.0;              // blind-zone length before an obstacle, m

  /// Throws ConfigError on probabilities outside [0,1] or negative extents.
  void validate() const;
};

/// Forward-looking height ray: `samples` points at spacing*(j+1) ahead of the
/// body.
struct ScanConfig {
  std::size_t samples = 32;
  double spacing = 0.05;  // m

  double reach() const { return spacing * static_cast<double>(samples); }
};

struct FeatureStream {
  nn::Tensor heights;       // [frames x samples], zero where invalid
  nn::Tensor sample_valid;  // [frames x samples], 1 or 0
  std::vector<bool> frame_valid;
  nn::Tensor truth;         // [frames x samples], uncorrupted lookups
};

/// Per-frame height scan along the trajectory's forward progress with the
/// corruption applied. Throws DimensionError when the ray leaves the terrain.
FeatureStream terrain_feature_stream(const Trajectory& traj, const TerrainProfile& terrain,
                                     const CorruptionSpec& corruption,
                                     std::uint64_t seed, const ScanConfig& scan = {});

/// True when some obstacle starts within (0, window] metres ahead of x.
bool in_blind_zone(const TerrainProfile& terrain, double x, double window);

}  // namespace agility::sim
