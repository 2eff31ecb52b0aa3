#include "agility/ssm/ssm.hpp"

#include <cmath>

#include "agility/error.hpp"
#include "agility/nn/kernels.hpp"

namespace agility::ssm {

namespace {

using nn::Tensor;

std::vector<double> rates(const SsmLayer& layer) {
  std::vector<double> r(layer.state_dim());
  for (std::size_t n = 0; n < r.size(); ++n) r[n] = std::exp(layer.log_rate[n]);
  return r;
}

// Shared by the streaming and batched paths so both round identically.
// Writes decay, gate and the new state; returns false if h_new is not finite.
bool advance(std::size_t n_state, const double* zdelta, const double* zgate,
             const double* u, const double* h_prev, const double* rate,
             double* decay, double* gate, double* h_new, double* q) {
  bool finite = true;
  for (std::size_t n = 0; n < n_state; ++n) {
    const double a = std::exp(-nn::softplus(zdelta[n]) * rate[n]);
    decay[n] = a;
    h_new[n] = a * h_prev[n] + (1.0 - a) * u[n];
    gate[n] = 2.0 * nn::sigmoid(zgate[n]);
    q[n] = gate[n] * h_new[n];
    finite = finite && std::isfinite(h_new[n]);
  }
  return finite;
}

void check_input(const SsmLayer& layer, const Tensor& x) {
  if (x.cols() != layer.input_dim()) {
    throw DimensionError("ssm: input has " + std::to_string(x.cols()) +
                         " features, layer expects " +
                         std::to_string(layer.input_dim()));
  }
}

}  // namespace

SsmLayer SsmLayer::make(std::size_t input, std::size_t state,
                        std::size_t output) {
  SsmLayer l;
  l.delta = nn::make_linear(input, state);
  l.log_rate = Tensor({state});
  l.grad_log_rate = Tensor({state});
  l.w_in = Tensor({input, state});
  l.grad_w_in = Tensor({input, state});
  l.gate = nn::make_linear(input, state);
  l.w_out = Tensor({state, output});
  l.grad_w_out = Tensor({state, output});
  return l;
}

SsmState SsmLayer::initial_state() const { return {Tensor({state_dim()}), 0}; }

StepMatrices SsmLayer::matrices(const Tensor& x) const {
  check_input(*this, x);
  const std::size_t in = input_dim();
  const std::size_t ns = state_dim();
  const std::size_t out = output_dim();
  const Tensor zd = nn::linear(x, delta);
  const Tensor zg = nn::linear(x, gate);
  const auto r = rates(*this);
  StepMatrices m{Tensor({ns}), Tensor({ns, in}), Tensor({out, ns})};
  for (std::size_t n = 0; n < ns; ++n) {
    m.a[n] = std::exp(-nn::softplus(zd[n]) * r[n]);
    for (std::size_t i = 0; i < in; ++i) {
      m.b.at(n, i) = (1.0 - m.a[n]) * w_in.at(i, n);
    }
    const double g = 2.0 * nn::sigmoid(zg[n]);
    for (std::size_t o = 0; o < out; ++o) m.c.at(o, n) = g * w_out.at(n, o);
  }
  return m;
}

void SsmLayer::init(Rng& rng) {
  const std::size_t in = input_dim();
  const std::size_t ns = state_dim();
  nn::init_glorot(delta, in, ns, rng, 0.1);
  nn::init_glorot(gate, in, ns, rng, 0.1);
  const double s_in = std::sqrt(6.0 / static_cast<double>(in + ns));
  for (double& w : w_in.values()) w = uniform(rng, -s_in, s_in);
  const double s_out =
      std::sqrt(6.0 / static_cast<double>(ns + output_dim()));
  for (double& w : w_out.values()) w = uniform(rng, -s_out, s_out);
  log_rate.fill(0.0);
  // delta_n = softplus(bias_n), log-spaced so exp(-delta_n) spans 0.5..0.999.
  const double lo = std::log(1e-3);
  const double hi = std::log(std::log(2.0));
  for (std::size_t n = 0; n < ns; ++n) {
    const double frac = ns > 1 ? static_cast<double>(n) / (ns - 1) : 0.0;
    const double step = std::exp(lo + frac * (hi - lo));
    delta.bias[n] = std::log(std::expm1(step));
  }
}

void SsmLayer::append_params(nn::ParamList& list, const std::string& prefix) {
  nn::append_params(list, prefix + ".delta", delta);
  list.push_back({prefix + ".log_rate", &log_rate, &grad_log_rate});
  list.push_back({prefix + ".w_in", &w_in, &grad_w_in});
  nn::append_params(list, prefix + ".gate", gate);
  list.push_back({prefix + ".w_out", &w_out, &grad_w_out});
}

StepResult ssm_step(const SsmLayer& layer, const SsmState& state,
                    const Tensor& x) {
  check_input(layer, x);
  if (x.rows() != 1) throw DimensionError("ssm_step: expected one input row");
  const std::size_t ns = layer.state_dim();
  if (state.h.size() != ns) {
    throw DimensionError("ssm_step: state has wrong dimension");
  }
  const Tensor zd = nn::linear(x, layer.delta);
  const Tensor zg = nn::linear(x, layer.gate);
  Tensor u({1, ns});
  nn::kernels::fast::matmul(x.data(), layer.w_in.data(), u.data(), 1,
                            layer.input_dim(), ns);
  const auto r = rates(layer);

  StepResult out{Tensor({layer.output_dim()}),
                 {Tensor({ns}), state.step_index + 1}};
  std::vector<double> decay(ns), gate(ns), q(ns);
  if (!advance(ns, zd.data(), zg.data(), u.data(), state.h.data(), r.data(),
               decay.data(), gate.data(), out.state.h.data(), q.data())) {
    throw NumericError("ssm: non-finite hidden state", state.step_index + 1);
  }
  nn::kernels::fast::matmul(q.data(), layer.w_out.data(), out.y.data(), 1, ns,
                            layer.output_dim());
  return out;
}

StepResult linear_step(const StepMatrices& m, const SsmState& state,
                       const Tensor& x) {
  const std::size_t ns = m.a.size();
  const std::size_t in = x.size();
  if (state.h.size() != ns || m.b.rows() != ns || m.b.cols() != in ||
      m.c.cols() != ns) {
    throw DimensionError("linear_step: matrix shapes disagree");
  }
  StepResult out{Tensor({m.c.rows()}), {Tensor({ns}), state.step_index + 1}};
  for (std::size_t n = 0; n < ns; ++n) {
    double v = m.a[n] * state.h[n];
    for (std::size_t i = 0; i < in; ++i) v += m.b.at(n, i) * x[i];
    if (!std::isfinite(v)) {
      throw NumericError("ssm: non-finite hidden state", state.step_index + 1);
    }
    out.state.h[n] = v;
  }
  for (std::size_t o = 0; o < m.c.rows(); ++o) {
    double v = 0.0;
    for (std::size_t n = 0; n < ns; ++n) v += m.c.at(o, n) * out.state.h[n];
    out.y[o] = v;
  }
  return out;
}

ScanResult ssm_scan(const SsmLayer& layer, const SsmState& initial,
                    const std::vector<Tensor>& xs) {
  ScanResult result{{}, initial};
  if (xs.empty()) return result;
  const std::size_t in = layer.input_dim();
  Tensor x({xs.size(), in});
  for (std::size_t t = 0; t < xs.size(); ++t) {
    check_input(layer, xs[t]);
    if (xs[t].size() != in) throw DimensionError("ssm_scan: ragged inputs");
    std::copy(xs[t].data(), xs[t].data() + in, x.data() + t * in);
  }
  const Tensor h0 = initial.h.reshaped({1, layer.state_dim()});
  ScanCache cache;
  const Tensor y = scan_forward(layer, x, 1, h0, &cache, initial.step_index);
  const std::size_t out = layer.output_dim();
  result.ys.reserve(xs.size());
  for (std::size_t t = 0; t < xs.size(); ++t) {
    result.ys.emplace_back(std::vector<std::size_t>{out},
                           std::vector<double>(y.data() + t * out,
                                               y.data() + (t + 1) * out));
  }
  result.state.h = final_state(cache).reshaped({layer.state_dim()});
  result.state.step_index = initial.step_index + xs.size();
  return result;
}

Tensor scan_forward(const SsmLayer& layer, const Tensor& x, std::size_t batch,
                    const Tensor& h0, ScanCache* cache,
                    std::uint64_t first_step) {
  check_input(layer, x);
  const std::size_t ns = layer.state_dim();
  if (batch == 0 || x.rows() % batch != 0) {
    throw DimensionError("ssm scan: rows not a multiple of batch");
  }
  if (h0.size() != batch * ns) {
    throw DimensionError("ssm scan: h0 must be [batch x state]");
  }
  const std::size_t steps = x.rows() / batch;
  const std::size_t rows = steps * batch;

  ScanCache local;
  ScanCache& c = cache ? *cache : local;
  c.steps = steps;
  c.batch = batch;
  c.first_step = first_step;
  c.x = x;
  c.zdelta = nn::linear(x, layer.delta);
  c.zgate = nn::linear(x, layer.gate);
  c.u = Tensor({rows, ns});
  nn::kernels::fast::matmul(x.data(), layer.w_in.data(), c.u.data(), rows,
                            layer.input_dim(), ns);
  c.decay = Tensor({rows, ns});
  c.gate = Tensor({rows, ns});
  c.h = Tensor({rows + batch, ns});
  std::copy(h0.data(), h0.data() + batch * ns, c.h.data());
  Tensor q({rows, ns});
  const auto r = rates(layer);

  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t row = t * batch + b;
      const std::size_t off = row * ns;
      if (!advance(ns, c.zdelta.data() + off, c.zgate.data() + off,
                   c.u.data() + off, c.h.data() + off, r.data(),
                   c.decay.data() + off, c.gate.data() + off,
                   c.h.data() + off + batch * ns, q.data() + off)) {
        throw NumericError("ssm: non-finite hidden state",
                           first_step + t + 1);
      }
    }
  }
  Tensor y({rows, layer.output_dim()});
  nn::kernels::fast::matmul(q.data(), layer.w_out.data(), y.data(), rows, ns,
                            layer.output_dim());
  return y;
}

Tensor final_state(const ScanCache& cache) {
  const std::size_t ns = cache.h.cols();
  const std::size_t off = cache.steps * cache.batch * ns;
  return Tensor({cache.batch, ns},
                std::vector<double>(cache.h.data() + off,
                                    cache.h.data() + off + cache.batch * ns));
}

ScanGrads scan_backward(SsmLayer& layer, const ScanCache& c, const Tensor& dy) {
  const std::size_t ns = layer.state_dim();
  const std::size_t out = layer.output_dim();
  const std::size_t rows = c.steps * c.batch;
  if (dy.rows() != rows || dy.cols() != out) {
    throw DimensionError("ssm scan backward: dy must be [(T*B) x output]");
  }
  const auto r = rates(layer);

  // q = g * h_t feeds the readout.
  Tensor q({rows, ns});
  for (std::size_t i = 0; i < rows * ns; ++i) {
    q[i] = c.gate[i] * c.h[i + c.batch * ns];
  }
  nn::kernels::fast::matmul_tn(q.data(), dy.data(), layer.grad_w_out.data(),
                               ns, rows, out, true);
  Tensor dq({rows, ns});
  nn::kernels::fast::matmul_nt(dy.data(), layer.w_out.data(), dq.data(), rows,
                               out, ns);

  Tensor dzdelta({rows, ns});
  Tensor dzgate({rows, ns});
  Tensor du({rows, ns});
  Tensor dh({c.batch, ns});
  for (std::size_t t = c.steps; t-- > 0;) {
    for (std::size_t b = 0; b < c.batch; ++b) {
      const std::size_t off = (t * c.batch + b) * ns;
      const double* h_prev = c.h.data() + off;
      const double* h_cur = h_prev + c.batch * ns;
      double* dh_b = dh.data() + b * ns;
      for (std::size_t n = 0; n < ns; ++n) {
        const std::size_t i = off + n;
        const double g = c.gate[i];
        const double dht = dh_b[n] + dq[i] * g;
        // g = 2 sigmoid(z): dg/dz = g (1 - g/2)
        dzgate[i] = dq[i] * h_cur[n] * g * (1.0 - 0.5 * g);
        const double a = c.decay[i];
        const double da = dht * (h_prev[n] - c.u[i]);
        du[i] = dht * (1.0 - a);
        dh_b[n] = dht * a;
        // a = exp(-softplus(z) * rate)
        const double step = nn::softplus(c.zdelta[i]);
        dzdelta[i] = da * (-r[n] * a) * nn::sigmoid(c.zdelta[i]);
        layer.grad_log_rate[n] += da * (-step * a) * r[n];
      }
    }
  }

  ScanGrads g;
  g.dh0 = std::move(dh);
  g.dx = nn::linear_backward(c.x, dzdelta, layer.delta);
  const Tensor dx_gate = nn::linear_backward(c.x, dzgate, layer.gate);
  nn::kernels::fast::matmul_tn(c.x.data(), du.data(), layer.grad_w_in.data(),
                               layer.input_dim(), rows, ns, true);
  Tensor dx_in({rows, layer.input_dim()});
  nn::kernels::fast::matmul_nt(du.data(), layer.w_in.data(), dx_in.data(), rows,
                               ns, layer.input_dim());
  for (std::size_t i = 0; i < g.dx.size(); ++i) g.dx[i] += dx_gate[i] + dx_in[i];
  return g;
}

}  // namespace agility::ssm
