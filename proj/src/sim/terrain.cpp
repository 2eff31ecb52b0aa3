#include "agility/sim/terrain.hpp"

#include <cmath>

#include "agility/error.hpp"
#include "agility/random.hpp"

namespace agility::sim {

std::string to_string(ObstacleKind k) {
  switch (k) {
    case ObstacleKind::hurdle: return "hurdle";
    case ObstacleKind::step: return "step";
    case ObstacleKind::gap: return "gap";
  }
  return "hurdle";
}

ObstacleKind obstacle_kind_from_string(const std::string& s) {
  if (s == "hurdle") return ObstacleKind::hurdle;
  if (s == "step") return ObstacleKind::step;
  if (s == "gap") return ObstacleKind::gap;
  throw ParseError("unknown obstacle kind '" + s + "'", 0);
}

std::string to_string(TerrainKind k) {
  switch (k) {
    case TerrainKind::flat: return "flat";
    case TerrainKind::hurdles: return "hurdles";
    case TerrainKind::steps: return "steps";
    case TerrainKind::gaps: return "gaps";
    case TerrainKind::mixed: return "mixed";
  }
  return "flat";
}

TerrainKind terrain_kind_from_string(const std::string& s) {
  if (s == "flat") return TerrainKind::flat;
  if (s == "hurdles") return TerrainKind::hurdles;
  if (s == "steps") return TerrainKind::steps;
  if (s == "gaps") return TerrainKind::gaps;
  if (s == "mixed") return TerrainKind::mixed;
  throw ConfigError("unknown terrain kind '" + s + "'");
}

double TerrainProfile::height_at(double x) const {
  const double cell = std::floor(x / grid_dx);
  if (!(cell >= 0) || cell >= static_cast<double>(heights.size())) {
    throw DimensionError("terrain lookup at x=" + std::to_string(x) +
                         " outside [0, " + std::to_string(extent()) + ")");
  }
  return heights[static_cast<std::size_t>(cell)];
}

void TerrainConfig::validate() const {
  if (!(grid_dx > 0)) throw ConfigError("terrain.grid_dx must be positive");
  if (!(length > grid_dx)) throw ConfigError("terrain.length must exceed grid_dx");
  for (const Range* r : {&spacing, &hurdle_height, &hurdle_width, &step_height,
                         &gap_width}) {
    if (!(r->lo <= r->hi)) throw ConfigError("terrain: min exceeds max");
    if (r->lo < 0) throw ConfigError("terrain: ranges must be non-negative");
  }
  if (!(spacing.lo > 0)) throw ConfigError("terrain.spacing must be positive");
  if (pit_depth < 0 || lead_in < 0 || max_obstacles < 0) {
    throw ConfigError("terrain: pit_depth, lead_in, max_obstacles must be >= 0");
  }
}

TerrainProfile generate_terrain(std::uint64_t seed, TerrainKind kind,
                                const TerrainConfig& cfg) {
  cfg.validate();
  Rng rng = fork(seed, 0x7e44a1);
  auto draw = [&](const Range& r) {
    return r.lo == r.hi ? r.lo : uniform(rng, r.lo, r.hi);
  };

  TerrainProfile t;
  t.grid_dx = cfg.grid_dx;
  const auto cells = static_cast<std::size_t>(std::ceil(cfg.length / cfg.grid_dx));
  t.heights.assign(cells, cfg.base_height);
  auto cell_of = [&](double x) {
    return static_cast<std::size_t>(std::llround(x / cfg.grid_dx));
  };

  if (kind != TerrainKind::flat) {
    double x = cfg.lead_in + draw(cfg.spacing);
    double level = cfg.base_height;
    int step_sign = 1;
    int placed = 0;
    while (x < cfg.length - cfg.spacing.lo &&
           (cfg.max_obstacles == 0 || placed < cfg.max_obstacles)) {
      ObstacleKind ok = ObstacleKind::hurdle;
      switch (kind) {
        case TerrainKind::hurdles: ok = ObstacleKind::hurdle; break;
        case TerrainKind::steps: ok = ObstacleKind::step; break;
        case TerrainKind::gaps: ok = ObstacleKind::gap; break;
        default: {
          const auto pick = std::uniform_int_distribution<int>(0, 2)(rng);
          ok = static_cast<ObstacleKind>(pick);
        }
      }
      // Snap to the grid so annotations coincide with the height samples.
      const std::size_t c0 = cell_of(x);
      const double xs = static_cast<double>(c0) * cfg.grid_dx;
      Obstacle ob{ok, xs, xs, 0.0};
      if (ok == ObstacleKind::step) {
        ob.height = step_sign * draw(cfg.step_height);
        step_sign = -step_sign;
        level += ob.height;
        for (std::size_t c = c0; c < cells; ++c) t.heights[c] = level;
      } else {
        const Range& width = ok == ObstacleKind::hurdle ? cfg.hurdle_width : cfg.gap_width;
        const std::size_t c1 =
            std::min(cells, c0 + std::max<std::size_t>(1, cell_of(draw(width))));
        ob.x_end = static_cast<double>(c1) * cfg.grid_dx;
        ob.height = ok == ObstacleKind::hurdle ? draw(cfg.hurdle_height) : -cfg.pit_depth;
        for (std::size_t c = c0; c < c1; ++c) t.heights[c] = level + ob.height;
      }
      t.obstacles.push_back(ob);
      ++placed;
      x = std::max(ob.x_end, ob.x_start) + draw(cfg.spacing);
    }
  }
  return t;
}

nlohmann::json terrain_to_json(const TerrainProfile& t) {
  nlohmann::json obstacles = nlohmann::json::array();
  for (const auto& o : t.obstacles) {
    obstacles.push_back({{"kind", to_string(o.kind)},
                         {"x_start", o.x_start},
                         {"x_end", o.x_end},
                         {"height", o.height}});
  }
  return {{"grid_dx", t.grid_dx}, {"heights", t.heights}, {"obstacles", obstacles}};
}

TerrainProfile terrain_from_json(const nlohmann::json& j) {
  try {
    TerrainProfile t;
    t.grid_dx = j.at("grid_dx").get<double>();
    t.heights = j.at("heights").get<std::vector<double>>();
    for (const auto& o : j.at("obstacles")) {
      t.obstacles.push_back({obstacle_kind_from_string(o.at("kind").get<std::string>()),
                             o.at("x_start").get<double>(), o.at("x_end").get<double>(),
                             o.at("height").get<double>()});
    }
    if (!(t.grid_dx > 0)) throw ParseError("terrain grid_dx must be positive", 0);
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("terrain: ") + e.what(), 0);
  }
}

}  // namespace agility::sim
