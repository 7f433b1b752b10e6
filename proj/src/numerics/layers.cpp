// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include "slicegate/numerics/layers.hpp"

#include <cmath>

namespace slicegate::numerics {

template <typename T>
Tensor<T> normal_parameter(Shape shape, double stddev, Rng& rng) {
  std::vector<T> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<T>(rng.normal(0.0, stddev));
  return Tensor<T>(std::move(shape), std::move(v), true);
}

template <typename T>
Linear<T> Linear<T>::init(std::size_t in, std::size_t out, bool with_bias, Rng& rng) {
  Linear l;
  l.weight = normal_parameter<T>({in, out}, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  if (with_bias) l.bias = Tensor<T>::zeros({out}, true);
  return l;
}

template <typename T>
void Linear<T>::collect(const std::string& prefix, ParameterList<T>& out) const {
  out.push_back({prefix + ".weight", weight});
  if (bias.defined()) out.push_back({prefix + ".bias", bias});
}

template <typename T>
LayerNorm<T> LayerNorm<T>::init(std::size_t width) {
  return LayerNorm{Tensor<T>::full({width}, T(1), true), Tensor<T>::zeros({width}, true)};
}

template <typename T>
void LayerNorm<T>::collect(const std::string& prefix, ParameterList<T>& out) const {
  out.push_back({prefix + ".gain", gain});
  out.push_back({prefix + ".bias", bias});
}

template <typename T>
AttentionWeights<T> AttentionWeights<T>::init(std::size_t width, Rng& rng) {
  AttentionWeights w;
  w.query = Linear<T>::init(width, width, true, rng);
  w.key = Linear<T>::init(width, width, true, rng);
  w.value = Linear<T>::init(width, width, true, rng);
  w.output = Linear<T>::init(width, width, true, rng);
  return w;
}

template <typename T>
void AttentionWeights<T>::collect(const std::string& prefix, ParameterList<T>& out) const {
  query.collect(prefix + ".query", out);
  key.collect(prefix + ".key", out);
  value.collect(prefix + ".value", out);
  output.collect(prefix + ".output", out);
}

template <typename T>
Tensor<T> attention_forward(const Tensor<T>& x, const AttentionWeights<T>& weights, std::size_t heads,
                            const AttentionMask* mask) {
  if (x.rank() != 3) throw ShapeError("attention_forward: input must be [B, S, D], got " + shape_string(x.shape()));
  const std::size_t width = x.dim(2);
  if (heads == 0 || width % heads != 0) {
    throw ShapeError("attention_forward: width " + std::to_string(width) + " not divisible by " +
                     std::to_string(heads) + " heads");
  }
  auto q = weights.query(x);
  auto k = weights.key(x);
  auto v = weights.value(x);
  return weights.output(scaled_dot_product_attention(q, k, v, heads, mask));
}

template <typename T>
TransformerLayer<T> TransformerLayer<T>::init(std::size_t width, std::size_t heads, std::size_t mlp_ratio,
                                              double drop_path_rate, Rng& rng) {
  TransformerLayer l;
  l.norm1 = LayerNorm<T>::init(width);
  l.attention = AttentionWeights<T>::init(width, rng);
  l.norm2 = LayerNorm<T>::init(width);
  l.fc1 = Linear<T>::init(width, width * mlp_ratio, true, rng);
  l.fc2 = Linear<T>::init(width * mlp_ratio, width, true, rng);
  l.heads = heads;
  l.drop_path_rate = drop_path_rate;
  return l;
}

template <typename T>
Tensor<T> TransformerLayer<T>::forward(const Tensor<T>& x, bool training, Rng* rng) const {
  const bool stochastic = training && drop_path_rate > 0.0;
  if (stochastic && rng == nullptr) throw std::invalid_argument("TransformerLayer: drop-path needs an rng");
  Rng unused(0);
  Rng& r = rng ? *rng : unused;
  auto h = attention_forward(norm1(x), attention, heads);
  auto y = add(x, drop_path(h, drop_path_rate, training, r));
  auto m = fc2(gelu(fc1(norm2(y))));
  return add(y, drop_path(m, drop_path_rate, training, r));
}

template <typename T>
void TransformerLayer<T>::collect(const std::string& prefix, ParameterList<T>& out) const {
  norm1.collect(prefix + ".norm1", out);
  attention.collect(prefix + ".attn", out);
  norm2.collect(prefix + ".norm2", out);
  fc1.collect(prefix + ".mlp.fc1", out);
  fc2.collect(prefix + ".mlp.fc2", out);
}

template <typename T>
std::size_t TransformerLayer<T>::parameter_count(std::size_t width, std::size_t mlp_ratio) {
  const std::size_t d = width;
  const std::size_t hidden = d * mlp_ratio;
  const std::size_t norms = 4 * d;
  const std::size_t attn = 4 * (d * d + d);
  const std::size_t mlp = d * hidden + hidden + hidden * d + d;
  return norms + attn + mlp;
}

template <typename T>
std::size_t count_parameters(const ParameterList<T>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.size();
  return n;
}

#define SLICEGATE_INSTANTIATE_LAYERS(T)                                                        \
  template Tensor<T> normal_parameter<T>(Shape, double, Rng&);                                 \
  template struct Linear<T>;                                                                   \
  template struct LayerNorm<T>;                                                                \
  template struct AttentionWeights<T>;                                                         \
  template struct TransformerLayer<T>;                                                         \
  template Tensor<T> attention_forward(const Tensor<T>&, const AttentionWeights<T>&, std::size_t, \
                                       const AttentionMask*);                                  \
  template std::size_t count_parameters(const ParameterList<T>&);

SLICEGATE_INSTANTIATE_LAYERS(float)
SLICEGATE_INSTANTIATE_LAYERS(double)

}  // namespace slicegate::numerics
