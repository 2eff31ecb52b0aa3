#include "agility/gating/gating.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include "agility/error.hpp"
#include "agility/nn/adam.hpp"
#include "agility/nn/layers.hpp"
#include "agility/random.hpp"

namespace agility::gating {

using nn::Tensor;

void GatingConfig::validate() const {
  if (!(k > 0)) throw ConfigError("gating.k must be positive");
  if (!(tau >= 0)) throw ConfigError("gating.tau must be >= 0");
}

double gate_from_discrepancy(double discrepancy, const GatingConfig& cfg) {
  cfg.validate();
  return nn::sigmoid(cfg.k * (cfg.tau - discrepancy));
}

double gate(std::span<const double> a_student, std::span<const double> a_teacher,
            const GatingConfig& cfg) {
  if (a_student.size() != a_teacher.size()) {
    throw DimensionError("gate: student action has " + std::to_string(a_student.size()) +
                         " entries, teacher " + std::to_string(a_teacher.size()));
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < a_student.size(); ++i) {
    const double d = a_student[i] - a_teacher[i];
    sq += d * d;
  }
  return gate_from_discrepancy(std::sqrt(sq), cfg);
}

double total_loss(double l_rl, double l_bc, double lambda) {
  if (!(lambda >= 0 && lambda <= 1)) throw Error("total_loss: lambda outside [0, 1]");
  return lambda * l_rl + (1.0 - lambda) * l_bc;
}

void DistillConfig::validate() const {
  if (obs_dim == 0 || action_dim == 0 || hidden == 0 || train_samples == 0 ||
      val_samples == 0 || batch_size == 0 || log_every == 0) {
    throw ConfigError("distill: sizes must be positive");
  }
  if (!(learning_rate > 0) || !(final_lr_fraction > 0) || final_lr_fraction > 1) {
    throw ConfigError("distill: learning rate must be positive, final fraction in (0, 1]");
  }
  if (obs_noise < 0 || action_noise < 0) throw ConfigError("distill: noise must be >= 0");
  if (fixed_lambda && !(*fixed_lambda >= 0 && *fixed_lambda <= 1)) {
    throw ConfigError("distill: fixed_lambda must lie in [0, 1]");
  }
}

namespace {

// Two-layer ELU network with a linear skip path, so the linear teacher is
// exactly representable.
struct Student {
  nn::LayerParams hidden, out, skip;

  struct Cache {
    Tensor x, h;
  };

  Tensor forward(const Tensor& x, Cache* cache) const {
    Tensor h = nn::elu(nn::linear(x, hidden));
    Tensor y = add(nn::linear(h, out), nn::linear(x, skip));
    if (cache) *cache = {x, std::move(h)};
    return y;
  }

  void backward(const Cache& c, const Tensor& dy) {
    const Tensor dh = nn::linear_backward(c.h, dy, out);
    nn::linear_backward(c.x, nn::elu_backward(c.h, dh), hidden);
    nn::linear_backward(c.x, dy, skip);
  }

  nn::ParamList params() {
    nn::ParamList list;
    nn::append_params(list, "hidden", hidden);
    nn::append_params(list, "out", out);
    nn::append_params(list, "skip", skip);
    return list;
  }
};

}  // namespace

DistillResult distill_toy(const GatingConfig& gating, const DistillConfig& cfg,
                          std::uint64_t seed) {
  gating.validate();
  cfg.validate();
  Rng rng = fork(seed, 0xd157);
  const std::size_t od = cfg.obs_dim;
  const std::size_t ad = cfg.action_dim;
  const double obs_noise = cfg.corruption ? cfg.obs_noise : 0.0;
  const double action_noise = cfg.corruption ? cfg.action_noise : 0.0;

  Tensor teacher({od, ad});
  for (double& w : teacher.values()) w = normal(rng, 0.0, 1.0 / std::sqrt(static_cast<double>(od)));
  auto teacher_act = [&](const Tensor& obs) {
    Tensor a({obs.rows(), ad});
    for (std::size_t i = 0; i < obs.rows(); ++i) {
      for (std::size_t j = 0; j < ad; ++j) {
        double s = 0;
        for (std::size_t p = 0; p < od; ++p) s += obs.at(i, p) * teacher.at(p, j);
        a.at(i, j) = s;
      }
    }
    return a;
  };

  Tensor train_obs({cfg.train_samples, od});
  for (double& v : train_obs.values()) v = normal(rng);
  const Tensor train_teacher = teacher_act(train_obs);
  Tensor val_clean({cfg.val_samples, od});
  for (double& v : val_clean.values()) v = normal(rng);
  const Tensor val_teacher = teacher_act(val_clean);
  Tensor val_obs = val_clean;
  for (double& v : val_obs.values()) v += obs_noise > 0 ? normal(rng, 0.0, obs_noise) : 0.0;

  Student student{nn::make_linear(od, cfg.hidden), nn::make_linear(cfg.hidden, ad),
                  nn::make_linear(od, ad)};
  nn::init_glorot(student.hidden, od, cfg.hidden, rng);
  // The nonlinear branch starts silent and grows only where it helps.
  nn::init_glorot(student.skip, od, ad, rng);
  nn::ParamList params = student.params();
  nn::AdamState adam(params, {cfg.learning_rate});

  auto validate = [&](double* discrepancy) {
    const Tensor a = student.forward(val_obs, nullptr);
    double bc = 0, disc = 0;
    for (std::size_t i = 0; i < cfg.val_samples; ++i) {
      double sq = 0;
      for (std::size_t j = 0; j < ad; ++j) {
        const double d = a.at(i, j) - val_teacher.at(i, j);
        sq += d * d;
      }
      bc += sq;
      disc += std::sqrt(sq);
    }
    if (discrepancy) *discrepancy = disc / static_cast<double>(cfg.val_samples);
    return bc / static_cast<double>(cfg.val_samples);
  };

  DistillResult result;
  std::uniform_int_distribution<std::size_t> pick(0, cfg.train_samples - 1);
  const std::size_t b = cfg.batch_size;
  Student::Cache cache;
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    Tensor obs({b, od}), a_t({b, ad}), a_opt({b, ad});
    for (std::size_t i = 0; i < b; ++i) {
      const std::size_t s = pick(rng);
      for (std::size_t p = 0; p < od; ++p) {
        obs.at(i, p) = train_obs.at(s, p) + (obs_noise > 0 ? normal(rng, 0.0, obs_noise) : 0.0);
      }
      for (std::size_t j = 0; j < ad; ++j) {
        a_t.at(i, j) = train_teacher.at(s, j);
        a_opt.at(i, j) = a_t.at(i, j) + (action_noise > 0 ? normal(rng, 0.0, action_noise) : 0.0);
      }
    }
    const Tensor a_s = student.forward(obs, &cache);
    Tensor dy({b, ad});
    double lam_sum = 0, rl_sum = 0, bc_sum = 0, total_sum = 0;
    for (std::size_t i = 0; i < b; ++i) {
      double rl = 0, bc = 0;
      for (std::size_t j = 0; j < ad; ++j) {
        rl += (a_s.at(i, j) - a_opt.at(i, j)) * (a_s.at(i, j) - a_opt.at(i, j));
        bc += (a_s.at(i, j) - a_t.at(i, j)) * (a_s.at(i, j) - a_t.at(i, j));
      }
      const double lam = cfg.fixed_lambda ? *cfg.fixed_lambda
                                          : gate(a_s.row(i), a_t.row(i), gating);
      lam_sum += lam;
      rl_sum += rl;
      bc_sum += bc;
      total_sum += total_loss(rl, bc, lam);
      for (std::size_t j = 0; j < ad; ++j) {
        dy.at(i, j) = 2.0 *
                      (lam * (a_s.at(i, j) - a_opt.at(i, j)) +
                       (1.0 - lam) * (a_s.at(i, j) - a_t.at(i, j))) /
                      static_cast<double>(b);
      }
    }
    const double nb = static_cast<double>(b);
    if (!std::isfinite(total_sum)) throw NumericError("distill_toy: non-finite loss", step);
    nn::zero_grads(params);
    student.backward(cache, dy);
    const double progress = static_cast<double>(step - 1) / static_cast<double>(cfg.steps);
    const double floor = cfg.final_lr_fraction;
    adam.config.lr = cfg.learning_rate *
                     (floor + (1 - floor) * 0.5 * (1 + std::cos(std::numbers::pi * progress)));
    nn::adam_step(params, adam);
    if (step % cfg.log_every == 0 || step == cfg.steps) {
      result.curve.push_back({step, lam_sum / nb, rl_sum / nb, bc_sum / nb, total_sum / nb,
                              validate(nullptr)});
    }
  }
  result.final_val_bc = validate(&result.final_val_discrepancy);
  return result;
}

void write_distill_csv(const std::vector<DistillStep>& curve, std::ostream& out) {
  out << "step,lambda_mean,l_rl,l_bc,l_total,val_bc\n";
  out.precision(17);
  for (const auto& s : curve) {
    out << s.step << ',' << s.lambda_mean << ',' << s.l_rl << ',' << s.l_bc << ','
        << s.l_total << ',' << s.val_bc << '\n';
  }
}

}  // namespace agility::gating
