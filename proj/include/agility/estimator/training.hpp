#pragma once

#include <functional>
#include <vector>

#include "agility/ekf/ekf.hpp"
#include "agility/estimator/velocity_net.hpp"

namespace agility::estimator {

struct Split {
  sim::Dataset train;
  sim::Dataset val;
};

/// First round(train_fraction * episodes) episodes train, the rest validate.
/// Splitting by episode keeps overlapping windows out of both sides.
Split split_by_episode(const sim::Dataset& ds, double train_fraction = 0.8);

struct RmseReport {
  sim::Vec3 per_axis{};
  double total = 0.0;  // over all axes and frames
  std::size_t frames = 0;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_rmse = 0.0;
  double val_rmse = 0.0;
};

struct TrainResult {
  VelocityNet net;
  std::vector<EpochMetrics> curve;
  RmseReport val;
  std::size_t steps = 0;
};

/// Minibatch Adam with cosine learning-rate decay. The ResNet is trained on
/// the Huber-Gaussian loss; the MLP on the Huber term alone, after which its
/// fixed covariance is set to the per-axis mean squared training residual.
/// Throws NumericError tagged with the optimizer step on a non-finite loss.
TrainResult train_estimator(const EstimatorConfig& cfg, const sim::Dataset& train,
                            const sim::Dataset& val);

/// Produces one estimate per frame in [first, size) of a trajectory.
using MeasurementSource =
    std::function<std::vector<VelocityEstimate>(const sim::Trajectory&, std::size_t first)>;

MeasurementSource network_source(const VelocityNet& net);
/// v_net = v_gt with the given variance, for oracle-injection runs.
MeasurementSource oracle_source(double sigma = kSigmaFloor);

/// RMSE over frames [first_frame, size) of every trajectory. With `with_ekf`
/// the measurements are fused by ekf::run_filter started at first_frame.
/// Throws Error on an empty dataset.
RmseReport eval_rmse(const MeasurementSource& source, const sim::Dataset& ds, bool with_ekf,
                     std::size_t first_frame, const ekf::EkfConfig& ekf_cfg = {});
RmseReport eval_rmse(const VelocityNet& net, const sim::Dataset& ds, bool with_ekf,
                     const ekf::EkfConfig& ekf_cfg = {});

struct SigmaCalibration {
  double event_mean = 0.0;    // mean sigma (over axes) on slip/flight frames
  double nominal_mean = 0.0;
  std::size_t event_frames = 0;
  std::size_t nominal_frames = 0;
  double ratio() const { return event_mean / nominal_mean; }
};

SigmaCalibration sigma_calibration(const VelocityNet& net, const sim::Dataset& ds);

}  // namespace agility::estimator
