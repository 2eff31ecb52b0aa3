#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "agility/ekf/ekf.hpp"
#include "agility/estimator/training.hpp"
#include "agility/sim/config.hpp"

namespace agility::experiments {

struct Table6Config {
  sim::SimConfig sim;
  /// Shared training settings; arch and window are set per row.
  estimator::EstimatorConfig estimator;
  ekf::EkfConfig ekf;
  std::size_t seeds = 5;        // consecutive seeds starting at the run seed
  double train_fraction = 0.8;
  bool oracle = false;          // replace every network with v_gt measurements
  double oracle_sigma = estimator::kSigmaFloor;

  void validate() const;
};

/// Row names in table order.
const std::vector<std::string>& table6_rows();

struct Table6Row {
  std::string name;
  std::vector<estimator::RmseReport> per_seed;
  std::vector<std::vector<estimator::EpochMetrics>> curves;  // empty for +ekf rows
  bool failed = false;
  std::string failure;

  double mean_total() const;
  sim::Vec3 mean_per_axis() const;
};

struct Table6Result {
  std::vector<std::uint64_t> seeds;
  std::vector<Table6Row> rows;
  /// Mean slip/flight to nominal sigma ratio of the 10-frame ResNet per seed.
  std::vector<estimator::SigmaCalibration> calibration;

  /// Strict decrease of mean RMSE down the table; false if any row failed.
  bool ordering_holds() const;
  /// Number of seeds on which the strict ordering holds individually.
  std::size_t seeds_ordered() const;
  double mean_sigma_ratio() const;
};

/// Trains and evaluates the five estimator configurations on one dataset per
/// seed. A row whose training produces a non-finite loss is marked failed and
/// the remaining rows still run.
Table6Result run_table6(const Table6Config& cfg, std::uint64_t seed);

}  // namespace agility::experiments
