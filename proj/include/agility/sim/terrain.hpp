#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "agility/sim/config.hpp"

namespace agility::sim {

enum class ObstacleKind { hurdle, step, gap };

std::string to_string(ObstacleKind k);
ObstacleKind obstacle_kind_from_string(const std::string& s);

/// Annotated terrain feature. A step has x_start == x_end and `height` is the
/// signed change in ground level; hurdles and gaps span [x_start, x_end).
struct Obstacle {
  ObstacleKind kind = ObstacleKind::hurdle;
  double x_start = 0.0;
  double x_end = 0.0;
  double height = 0.0;

  bool operator==(const Obstacle&) const = default;
};

/// Heights on a uniform grid starting at x = 0. Lookups are piecewise
/// constant, so a step is a single discontinuity.
struct TerrainProfile {
  double grid_dx = 0.02;
  std::vector<double> heights;
  std::vector<Obstacle> obstacles;

  double extent() const { return grid_dx * static_cast<double>(heights.size()); }
  /// Throws DimensionError outside [0, extent()).
  double height_at(double x) const;

  bool operator==(const TerrainProfile&) const = default;
};

enum class TerrainKind { flat, hurdles, steps, gaps, mixed };

std::string to_string(TerrainKind k);
TerrainKind terrain_kind_from_string(const std::string& s);

struct TerrainConfig {
  double length = 12.0;  // m
  double grid_dx = 0.02;
  double base_height = 0.0;
  double lead_in = 2.0;  // obstacle-free start, m
  Range spacing{2.5, 3.5};
  Range hurdle_height{0.1, 0.3};
  Range hurdle_width{0.1, 0.4};
  Range step_height{0.1, 0.3};
  Range gap_width{0.2, 0.6};
  double pit_depth = 0.5;
  int max_obstacles = 0;  // 0 means fill the whole length

  void validate() const;
};

/// Piecewise terrain with annotated obstacles. Steps alternate up and down so
/// the ground level stays within one step height of `base_height`; gaps are
/// written as `pit_depth` below the surrounding ground.
TerrainProfile generate_terrain(std::uint64_t seed, TerrainKind kind,
                                const TerrainConfig& cfg);

nlohmann::json terrain_to_json(const TerrainProfile& t);
TerrainProfile terrain_from_json(const nlohmann::json& j);

}  // namespace agility::sim
