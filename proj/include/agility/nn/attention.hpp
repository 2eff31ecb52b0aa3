#pragma once

#include <string>

#include "agility/nn/layers.hpp"
#include "agility/nn/tensor.hpp"

namespace agility::nn {

/// Row-wise softmax with max subtraction.
Tensor softmax_rows(const Tensor& logits);

/// softmax(Q K^T / sqrt(d_k) + bias) V.
///
/// Q [n x d_k], K [m x d_k], V [m x d_v]; the optional additive `logit_bias`
/// is [n x m] (masking, or the translation-invariance check).
Tensor softmax_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                         const Tensor* logit_bias = nullptr);

struct AttentionGrads {
  Tensor dq;
  Tensor dk;
  Tensor dv;
};

AttentionGrads softmax_attention_backward(const Tensor& q, const Tensor& k,
                                          const Tensor& v, const Tensor& dout,
                                          const Tensor* logit_bias = nullptr);

/// Proprioception queries a set of terrain tokens: Q = p W_q, K = T W_k,
/// V = T W_v, out = Attention(Q, K, V).
struct CrossModalAttention {
  LayerParams query;
  LayerParams key;
  LayerParams value;

  static CrossModalAttention make(std::size_t proprio_dim,
                                  std::size_t token_dim, std::size_t key_dim,
                                  std::size_t value_dim);

  struct Cache {
    Tensor proprio, tokens, q, k, v;
  };

  /// proprio [n x proprio_dim], tokens [m x token_dim] -> [n x value_dim]
  Tensor forward(const Tensor& proprio, const Tensor& tokens,
                 Cache* cache = nullptr) const;

  struct Grads {
    Tensor d_proprio;
    Tensor d_tokens;
  };
  Grads backward(const Cache& cache, const Tensor& dout);

  void init(Rng& rng);
  void append_params(ParamList& list, const std::string& prefix);
};

}  // namespace agility::nn
