#include "agility/sim/features.hpp"

#include <cmath>

#include "agility/error.hpp"
#include "agility/random.hpp"

namespace agility::sim {

std::string to_string(CorruptionMode m) {
  switch (m) {
    case CorruptionMode::none: return "none";
    case CorruptionMode::frame_drop: return "frame_drop";
    case CorruptionMode::gaussian_noise: return "gaussian_noise";
    case CorruptionMode::fov_occlusion: return "fov_occlusion";
    case CorruptionMode::blind_zone: return "blind_zone";
  }
  return "none";
}

CorruptionMode corruption_mode_from_string(const std::string& s) {
  if (s == "none") return CorruptionMode::none;
  if (s == "frame_drop") return CorruptionMode::frame_drop;
  if (s == "gaussian_noise") return CorruptionMode::gaussian_noise;
  if (s == "fov_occlusion") return CorruptionMode::fov_occlusion;
  if (s == "blind_zone") return CorruptionMode::blind_zone;
  throw ConfigError("unknown corruption mode '" + s + "'");
}

void CorruptionSpec::validate() const {
  if (!(drop_probability >= 0 && drop_probability <= 1)) {
    throw ConfigError("corruption.drop_probability must lie in [0, 1]");
  }
  if (!(occluded_fraction >= 0 && occluded_fraction <= 1)) {
    throw ConfigError("corruption.occluded_fraction must lie in [0, 1]");
  }
  if (!(noise_sigma >= 0)) throw ConfigError("corruption.noise_sigma must be >= 0");
  if (!(window >= 0)) throw ConfigError("corruption.window must be >= 0");
}

bool in_blind_zone(const TerrainProfile& terrain, double x, double window) {
  for (const auto& o : terrain.obstacles) {
    const double ahead = o.x_start - x;
    if (ahead > 0 && ahead <= window) return true;
  }
  return false;
}

FeatureStream terrain_feature_stream(const Trajectory& traj, const TerrainProfile& terrain,
                                     const CorruptionSpec& corruption,
                                     std::uint64_t seed, const ScanConfig& scan) {
  corruption.validate();
  const std::size_t n = traj.frames.size();
  const std::size_t s = scan.samples;
  FeatureStream out;
  out.heights = nn::Tensor({n, s});
  out.truth = nn::Tensor({n, s});
  out.sample_valid = nn::Tensor({n, s});
  out.sample_valid.fill(1.0);
  out.frame_valid.assign(n, true);
  Rng rng = fork(seed, 0xc0440);

  const auto occluded = static_cast<std::size_t>(
      std::llround(corruption.occluded_fraction * static_cast<double>(s)));
  for (std::size_t i = 0; i < n; ++i) {
    const double x = traj.frames[i].x;
    for (std::size_t j = 0; j < s; ++j) {
      const double h = terrain.height_at(x + scan.spacing * static_cast<double>(j + 1));
      out.truth.at(i, j) = h;
      out.heights.at(i, j) = h;
    }
    switch (corruption.mode) {
      case CorruptionMode::none: break;
      case CorruptionMode::frame_drop:
        if (bernoulli(rng, corruption.drop_probability)) out.frame_valid[i] = false;
        break;
      case CorruptionMode::gaussian_noise:
        for (std::size_t j = 0; j < s; ++j) {
          out.heights.at(i, j) += normal(rng, 0.0, corruption.noise_sigma);
        }
        break;
      case CorruptionMode::fov_occlusion:
        if (occluded > 0) {
          const auto start = std::uniform_int_distribution<std::size_t>(0, s - occluded)(rng);
          for (std::size_t j = start; j < start + occluded; ++j) out.sample_valid.at(i, j) = 0.0;
        }
        break;
      case CorruptionMode::blind_zone:
        if (in_blind_zone(terrain, x, corruption.window)) out.frame_valid[i] = false;
        break;
    }
    for (std::size_t j = 0; j < s; ++j) {
      if (!out.frame_valid[i]) out.sample_valid.at(i, j) = 0.0;
      if (out.sample_valid.at(i, j) == 0.0) out.heights.at(i, j) = 0.0;
    }
  }
  return out;
}

}  // namespace agility::sim
