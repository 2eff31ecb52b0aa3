#include "agility/nn/attention.hpp"

#include <algorithm>
#include <cmath>

#include "agility/error.hpp"
#include "agility/nn/kernels.hpp"

namespace agility::nn {

namespace {

struct Shapes {
  std::size_t n, m, dk, dv;
};

Shapes check_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                       const Tensor* bias) {
  if (q.cols() == 0 || k.cols() == 0) {
    throw DimensionError("attention: key dimension d_k must be positive");
  }
  if (q.cols() != k.cols()) {
    throw DimensionError("attention: Q and K disagree on d_k (" +
                         std::to_string(q.cols()) + " vs " +
                         std::to_string(k.cols()) + ")");
  }
  if (k.rows() != v.rows()) {
    throw DimensionError("attention: K and V row counts differ");
  }
  if (k.rows() == 0) throw DimensionError("attention: no keys");
  Shapes s{q.rows(), k.rows(), q.cols(), v.cols()};
  if (bias && (bias->rows() != s.n || bias->cols() != s.m)) {
    throw DimensionError("attention: logit bias must be [n x m]");
  }
  return s;
}

Tensor attention_weights(const Tensor& q, const Tensor& k, const Shapes& s,
                         const Tensor* bias) {
  Tensor logits({s.n, s.m});
  kernels::fast::matmul_nt(q.data(), k.data(), logits.data(), s.n, s.dk, s.m);
  const double scale = 1.0 / std::sqrt(static_cast<double>(s.dk));
  for (std::size_t i = 0; i < logits.size(); ++i) {
    logits[i] *= scale;
    if (bias) logits[i] += (*bias)[i];
  }
  return softmax_rows(logits);
}

}  // namespace

Tensor softmax_rows(const Tensor& logits) {
  Tensor p = logits;
  const std::size_t m = p.cols();
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double* row = p.data() + i * m;
    const double mx = *std::max_element(row, row + m);
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      row[j] = std::exp(row[j] - mx);
      z += row[j];
    }
    for (std::size_t j = 0; j < m; ++j) row[j] /= z;
  }
  return p;
}

Tensor softmax_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                         const Tensor* logit_bias) {
  const Shapes s = check_attention(q, k, v, logit_bias);
  const Tensor p = attention_weights(q, k, s, logit_bias);
  Tensor out({s.n, s.dv});
  kernels::fast::matmul(p.data(), v.data(), out.data(), s.n, s.m, s.dv);
  return out;
}

AttentionGrads softmax_attention_backward(const Tensor& q, const Tensor& k,
                                          const Tensor& v, const Tensor& dout,
                                          const Tensor* logit_bias) {
  const Shapes s = check_attention(q, k, v, logit_bias);
  if (dout.rows() != s.n || dout.cols() != s.dv) {
    throw DimensionError("attention backward: dout must be [n x d_v]");
  }
  const Tensor p = attention_weights(q, k, s, logit_bias);

  AttentionGrads g{Tensor({s.n, s.dk}), Tensor({s.m, s.dk}),
                   Tensor({s.m, s.dv})};
  kernels::fast::matmul_tn(p.data(), dout.data(), g.dv.data(), s.m, s.n, s.dv);

  Tensor dp({s.n, s.m});
  kernels::fast::matmul_nt(dout.data(), v.data(), dp.data(), s.n, s.dv, s.m);
  // Softmax Jacobian-vector product, folded with the 1/sqrt(d_k) scale.
  const double scale = 1.0 / std::sqrt(static_cast<double>(s.dk));
  Tensor ds({s.n, s.m});
  for (std::size_t i = 0; i < s.n; ++i) {
    double inner = 0.0;
    for (std::size_t j = 0; j < s.m; ++j) inner += dp.at(i, j) * p.at(i, j);
    for (std::size_t j = 0; j < s.m; ++j) {
      ds.at(i, j) = p.at(i, j) * (dp.at(i, j) - inner) * scale;
    }
  }
  kernels::fast::matmul(ds.data(), k.data(), g.dq.data(), s.n, s.m, s.dk);
  kernels::fast::matmul_tn(ds.data(), q.data(), g.dk.data(), s.m, s.n, s.dk);
  return g;
}

CrossModalAttention CrossModalAttention::make(std::size_t proprio_dim,
                                              std::size_t token_dim,
                                              std::size_t key_dim,
                                              std::size_t value_dim) {
  return {make_linear(proprio_dim, key_dim), make_linear(token_dim, key_dim),
          make_linear(token_dim, value_dim)};
}

Tensor CrossModalAttention::forward(const Tensor& proprio,
                                    const Tensor& tokens, Cache* cache) const {
  Tensor q = linear(proprio, query);
  Tensor k = linear(tokens, key);
  Tensor v = linear(tokens, value);
  Tensor out = softmax_attention(q, k, v);
  if (cache) *cache = {proprio, tokens, std::move(q), std::move(k), std::move(v)};
  return out;
}

CrossModalAttention::Grads CrossModalAttention::backward(const Cache& c,
                                                         const Tensor& dout) {
  const AttentionGrads g = softmax_attention_backward(c.q, c.k, c.v, dout);
  Grads out;
  out.d_proprio = linear_backward(c.proprio, g.dq, query);
  out.d_tokens = linear_backward(c.tokens, g.dk, key);
  const Tensor dv_tokens = linear_backward(c.tokens, g.dv, value);
  for (std::size_t i = 0; i < out.d_tokens.size(); ++i) {
    out.d_tokens[i] += dv_tokens[i];
  }
  return out;
}

void CrossModalAttention::init(Rng& rng) {
  init_glorot(query, query.weight.dim(0), query.weight.dim(1), rng);
  init_glorot(key, key.weight.dim(0), key.weight.dim(1), rng);
  init_glorot(value, value.weight.dim(0), value.weight.dim(1), rng);
}

void CrossModalAttention::append_params(ParamList& list,
                                        const std::string& prefix) {
  nn::append_params(list, prefix + ".query", query);
  nn::append_params(list, prefix + ".key", key);
  nn::append_params(list, prefix + ".value", value);
}

}  // namespace agility::nn
