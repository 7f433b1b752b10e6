// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Parameterised building blocks shared by the backbone and the adapter.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "slicegate/numerics/ops.hpp"
#include "slicegate/numerics/rng.hpp"
#include "slicegate/numerics/tensor.hpp"

namespace slicegate::numerics {

template <typename T>
struct NamedParameter {
  std::string name;
  Tensor<T> tensor;
};

template <typename T>
using ParameterList = std::vector<NamedParameter<T>>;

/// Normal(0, stddev) leaf parameter.
template <typename T>
Tensor<T> normal_parameter(Shape shape, double stddev, Rng& rng);

template <typename T>
struct Linear {
  Tensor<T> weight;  // [in, out]
  Tensor<T> bias;    // [out], may be undefined

  static Linear init(std::size_t in, std::size_t out, bool with_bias, Rng& rng);
  Tensor<T> operator()(const Tensor<T>& x) const { return linear(x, weight, bias); }
  void collect(const std::string& prefix, ParameterList<T>& out) const;
};

template <typename T>
struct LayerNorm {
  Tensor<T> gain;
  Tensor<T> bias;

  static LayerNorm init(std::size_t width);
  Tensor<T> operator()(const Tensor<T>& x) const { return layer_norm(x, gain, bias); }
  void collect(const std::string& prefix, ParameterList<T>& out) const;
};

template <typename T>
struct AttentionWeights {
  Linear<T> query;
  Linear<T> key;
  Linear<T> value;
  Linear<T> output;

  static AttentionWeights init(std::size_t width, Rng& rng);
  void collect(const std::string& prefix, ParameterList<T>& out) const;
};

/// Multi-head self-attention with input and output projections over
/// x[B, S, D]. There is no residual or normalisation here; the caller wires
/// those.
template <typename T>
Tensor<T> attention_forward(const Tensor<T>& x, const AttentionWeights<T>& weights, std::size_t heads,
                            const AttentionMask* mask = nullptr);

/// Pre-norm encoder layer:
///   x = x + drop_path(attn(LN(x)));  x = x + drop_path(MLP(LN(x)))
/// with a GELU MLP of hidden width mlp_ratio * D.
template <typename T>
struct TransformerLayer {
  LayerNorm<T> norm1;
  AttentionWeights<T> attention;
  LayerNorm<T> norm2;
  Linear<T> fc1;
  Linear<T> fc2;
  std::size_t heads = 1;
  double drop_path_rate = 0.0;

  static TransformerLayer init(std::size_t width, std::size_t heads, std::size_t mlp_ratio,
                               double drop_path_rate, Rng& rng);

  /// x[B, S, D]; rng is only consumed in training mode with a nonzero rate.
  Tensor<T> forward(const Tensor<T>& x, bool training, Rng* rng) const;
  void collect(const std::string& prefix, ParameterList<T>& out) const;

  /// Closed-form parameter count for a layer of this shape.
  static std::size_t parameter_count(std::size_t width, std::size_t mlp_ratio);
};

template <typename T>
std::size_t count_parameters(const ParameterList<T>& params);

}  // namespace slicegate::numerics
