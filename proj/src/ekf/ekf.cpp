#include "agility/ekf/ekf.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "agility/error.hpp"

namespace agility::ekf {

namespace {

void require_finite(const Vec3& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string("ekf: non-finite ") + what);
  }
}

}  // namespace

void EkfConfig::validate() const {
  for (int i = 0; i < 3; ++i) {
    if (!(process_noise[i] > 0) || !(initial_variance[i] > 0)) {
      throw ConfigError("ekf: process_noise and initial_variance must be positive");
    }
  }
  if (!(dt > 0)) throw ConfigError("ekf: dt must be positive");
}

FilterState predict(const FilterState& s, const Vec3& accel, const Vec3& omega,
                    const EkfConfig& cfg) {
  if (!(cfg.dt > 0)) throw ConfigError("ekf: dt must be positive");
  require_finite(accel, "acceleration");
  require_finite(omega, "angular velocity");
  require_finite(s.v, "velocity");
  const Vec3 c = sim::cross(omega, s.v);
  FilterState out;
  for (int i = 0; i < 3; ++i) {
    out.v[i] = s.v[i] + (accel[i] - c[i]) * cfg.dt;
    out.P[i] = s.P[i] + cfg.process_noise[i];
  }
  out.t = s.t + cfg.dt;
  return out;
}

UpdateResult update(const FilterState& s, const estimator::VelocityEstimate& meas) {
  require_finite(meas.v_net, "measurement");
  UpdateResult r{s, {}};
  for (int i = 0; i < 3; ++i) {
    const double sigma = std::max(meas.sigma[i], estimator::kSigmaFloor);
    const double e = s.P[i] / (s.P[i] + sigma);
    r.gain[i] = e;
    r.state.v[i] = s.v[i] + e * (meas.v_net[i] - s.v[i]);
    r.state.P[i] = (1.0 - e) * s.P[i];
  }
  return r;
}

std::vector<FilterStep> run_filter(const std::vector<sim::ProprioFrame>& frames,
                                   const std::vector<estimator::VelocityEstimate>& meas,
                                   const EkfConfig& cfg) {
  cfg.validate();
  if (frames.size() != meas.size()) {
    throw DimensionError("run_filter: " + std::to_string(frames.size()) + " frames but " +
                         std::to_string(meas.size()) + " measurements");
  }
  std::vector<FilterStep> out;
  out.reserve(frames.size());
  FilterState s;
  s.P = cfg.initial_variance;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto& f = frames[k];
    if (k == 0) {
      s.t = f.t;
    } else {
      const double gap = f.t - frames[k - 1].t;
      if (std::abs(gap - cfg.dt) > 1e-9) {
        throw Error("run_filter: timestamp gap " + std::to_string(gap) + " at frame " +
                    std::to_string(k) + " differs from dt " + std::to_string(cfg.dt));
      }
      s = predict(s, f.a_imu, f.omega_imu, cfg);
    }
    const auto u = update(s, meas[k]);
    s = u.state;
    out.push_back({f.t, f.v_gt, meas[k], s.v, s.P, u.gain});
  }
  return out;
}

void write_filter_csv(const std::vector<FilterStep>& steps, std::ostream& out) {
  out << "t";
  for (const char* group : {"v_gt", "v_net", "sigma", "v_fused", "P", "E"}) {
    for (const char* axis : {"x", "y", "z"}) out << ',' << group << '_' << axis;
  }
  out << '\n';
  out.precision(17);
  for (const auto& s : steps) {
    out << s.t;
    for (const Vec3* v : {&s.v_gt, &s.meas.v_net, &s.meas.sigma, &s.v_fused, &s.P, &s.gain}) {
      for (double x : *v) out << ',' << x;
    }
    out << '\n';
  }
}

}  // namespace agility::ekf
