#include "agility/experiments/table6.hpp"

#include <cmath>
#include <limits>

#include "agility/error.hpp"
#include "agility/sim/generator.hpp"

namespace agility::experiments {

using estimator::Architecture;
using estimator::RmseReport;

void Table6Config::validate() const {
  sim.validate();
  estimator.validate();
  ekf.validate();
  if (seeds == 0) throw ConfigError("table6.seeds must be positive");
  if (!(train_fraction > 0 && train_fraction < 1)) {
    throw ConfigError("table6.train_fraction must lie in (0, 1)");
  }
  if (!(oracle_sigma > 0)) throw ConfigError("table6.oracle_sigma must be positive");
  if (estimator.first_frame + 1 < 10) {
    throw ConfigError("table6: estimator.first_frame must be >= 9 so every row scores the same frames");
  }
}

const std::vector<std::string>& table6_rows() {
  static const std::vector<std::string> rows{"mlp", "mlp+ekf", "resnet1", "resnet10",
                                             "resnet10+ekf"};
  return rows;
}

double Table6Row::mean_total() const {
  if (failed || per_seed.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0;
  for (const auto& r : per_seed) s += r.total;
  return s / static_cast<double>(per_seed.size());
}

sim::Vec3 Table6Row::mean_per_axis() const {
  sim::Vec3 m{};
  if (failed || per_seed.empty()) m.fill(std::numeric_limits<double>::quiet_NaN());
  else {
    for (const auto& r : per_seed) {
      for (int k = 0; k < 3; ++k) m[k] += r.per_axis[k] / static_cast<double>(per_seed.size());
    }
  }
  return m;
}

bool Table6Result::ordering_holds() const {
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    if (rows[i].failed || rows[i + 1].failed) return false;
    if (!(rows[i].mean_total() > rows[i + 1].mean_total())) return false;
  }
  return !rows.empty();
}

std::size_t Table6Result::seeds_ordered() const {
  for (const auto& r : rows) {
    if (r.failed) return 0;
  }
  std::size_t count = 0;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    bool ok = true;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
      ok = ok && rows[i].per_seed[s].total > rows[i + 1].per_seed[s].total;
    }
    if (ok) ++count;
  }
  return count;
}

double Table6Result::mean_sigma_ratio() const {
  if (calibration.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0;
  for (const auto& c : calibration) s += c.ratio();
  return s / static_cast<double>(calibration.size());
}

namespace {

void fail_row(Table6Row& row, const std::string& why) {
  row.failed = true;
  row.failure = why;
}

}  // namespace

Table6Result run_table6(const Table6Config& cfg, std::uint64_t seed) {
  cfg.validate();
  Table6Result result;
  for (const auto& name : table6_rows()) result.rows.push_back({name, {}, {}, false, {}});
  auto& mlp = result.rows[0];
  auto& mlp_ekf = result.rows[1];
  auto& res1 = result.rows[2];
  auto& res10 = result.rows[3];
  auto& res10_ekf = result.rows[4];
  const std::size_t first = cfg.estimator.first_frame;

  for (std::size_t i = 0; i < cfg.seeds; ++i) {
    const std::uint64_t s = seed + i;
    result.seeds.push_back(s);
    const auto ds = sim::generate_dataset(s, cfg.sim);
    const auto split = estimator::split_by_episode(ds, cfg.train_fraction);

    if (cfg.oracle) {
      const auto source = estimator::oracle_source(cfg.oracle_sigma);
      for (auto& row : result.rows) {
        const bool ekf = row.name.ends_with("+ekf");
        row.per_seed.push_back(estimator::eval_rmse(source, split.val, ekf, first, cfg.ekf));
      }
      continue;
    }

    // Trains one network; evaluates it plain into `row` and fused into `fused`.
    auto run = [&](Table6Row& row, Table6Row* fused, Architecture arch, std::size_t window) {
      if (row.failed) {
        if (fused) fail_row(*fused, row.failure);
        return std::optional<estimator::VelocityNet>{};
      }
      estimator::EstimatorConfig ec = cfg.estimator;
      ec.arch = arch;
      ec.window = window;
      ec.seed = s;
      try {
        auto trained = estimator::train_estimator(ec, split.train, split.val);
        row.per_seed.push_back(estimator::eval_rmse(network_source(trained.net), split.val,
                                                    false, first, cfg.ekf));
        row.curves.push_back(trained.curve);
        if (fused && !fused->failed) {
          fused->per_seed.push_back(estimator::eval_rmse(network_source(trained.net), split.val,
                                                         true, first, cfg.ekf));
        }
        return std::optional<estimator::VelocityNet>(std::move(trained.net));
      } catch (const NumericError& e) {
        const std::string why = "seed " + std::to_string(s) + ": " + e.what();
        fail_row(row, why);
        if (fused) fail_row(*fused, why);
        return std::optional<estimator::VelocityNet>{};
      }
    };
    run(mlp, &mlp_ekf, Architecture::mlp, 1);
    run(res1, nullptr, Architecture::resnet1d, 1);
    if (auto net = run(res10, &res10_ekf, Architecture::resnet1d, 10)) {
      result.calibration.push_back(estimator::sigma_calibration(*net, split.val));
    }
  }
  return result;
}

}  // namespace agility::experiments
