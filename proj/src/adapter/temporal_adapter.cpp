// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include "slicegate/adapter/temporal_adapter.hpp"

#include <stdexcept>
#include <string>

namespace slicegate::adapter {

using numerics::LayerNorm;
using numerics::Linear;
using numerics::ShapeError;
using numerics::TransformerLayer;

void AdapterConfig::validate(std::size_t token_width) const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("adapter config: " + msg); };
  if (proj_width == 0 || heads == 0 || proj_width % heads != 0) fail("proj_width must be divisible by heads");
  if (token_width % heads != 0) fail("token width must be divisible by heads");
  if (temporal_depth == 0) fail("temporal_depth must be positive");
  if (mlp_ratio == 0) fail("mlp_ratio must be positive");
  if (!(max_drop_path >= 0.0 && max_drop_path < 1.0)) fail("max_drop_path must lie in [0, 1)");
}

void to_json(nlohmann::json& j, const AdapterConfig& c) {
  j = nlohmann::json{{"proj_width", c.proj_width},       {"temporal_depth", c.temporal_depth},
                     {"heads", c.heads},                 {"mlp_ratio", c.mlp_ratio},
                     {"max_drop_path", c.max_drop_path}, {"gate_bias_init", c.gate_bias_init}};
}

void from_json(const nlohmann::json& j, AdapterConfig& c) {
  j.at("proj_width").get_to(c.proj_width);
  j.at("temporal_depth").get_to(c.temporal_depth);
  j.at("heads").get_to(c.heads);
  j.at("mlp_ratio").get_to(c.mlp_ratio);
  j.at("max_drop_path").get_to(c.max_drop_path);
  j.at("gate_bias_init").get_to(c.gate_bias_init);
}

std::vector<double> drop_path_schedule(std::size_t depth, double max_rate) {
  std::vector<double> rates(depth, 0.0);
  for (std::size_t i = 1; i < depth; ++i) {
    rates[i] = max_rate * (static_cast<double>(i) / static_cast<double>(depth - 1));
  }
  return rates;
}

template <typename T>
TemporalAdapter<T> TemporalAdapter<T>::init(const AdapterConfig& config, std::size_t token_width, Rng& rng) {
  config.validate(token_width);
  TemporalAdapter a;
  a.config_ = config;
  a.token_width_ = token_width;
  const std::size_t dp = config.proj_width;
  a.w_in_ = Linear<T>::init(token_width, dp, false, rng);
  a.in_norm_ = LayerNorm<T>::init(dp);
  a.e_pos_ = numerics::normal_parameter<T>({kWindow, dp}, 0.02, rng);
  for (double rate : drop_path_schedule(config.temporal_depth, config.max_drop_path)) {
    a.temporal_layers_.push_back(TransformerLayer<T>::init(dp, config.heads, config.mlp_ratio, rate, rng));
  }
  a.w_out_ = Linear<T>::init(dp, token_width, false, rng);
  a.spatial_ = TransformerLayer<T>::init(token_width, config.heads, config.mlp_ratio, 0.0, rng);
  a.gate_.weight = Tensor<T>::zeros({token_width, 1}, true);
  a.gate_.bias = Tensor<T>::full({1}, static_cast<T>(config.gate_bias_init), true);
  return a;
}

template <typename T>
Tensor<T> TemporalAdapter<T>::project_tokens(const WindowTokens<T>& window) const {
  const auto& x = window.tokens;
  if (x.rank() != 4 || x.dim(1) != kWindow || x.dim(3) != token_width_) {
    throw ShapeError("project_tokens: window must be [B, 5, L, " + std::to_string(token_width_) + "], got " +
                     numerics::shape_string(x.shape()));
  }
  const std::size_t batch = x.dim(0);
  const std::size_t len = x.dim(2);
  auto seq = numerics::reshape(numerics::swap_axes(x, 1), {batch * len, kWindow, token_width_});
  return numerics::add_broadcast(in_norm_(w_in_(seq)), e_pos_);
}

template <typename T>
Tensor<T> TemporalAdapter<T>::temporal_attend(const Tensor<T>& projected, std::size_t batch, bool training,
                                              Rng* rng) const {
  if (projected.rank() != 3 || projected.dim(1) != kWindow || batch == 0 || projected.dim(0) % batch != 0) {
    throw ShapeError("temporal_attend: expected [B*L, 5, D_proj], got " + numerics::shape_string(projected.shape()));
  }
  auto x = projected;
  for (const auto& layer : temporal_layers_) x = layer.forward(x, training, rng);
  auto center = w_out_(numerics::select(x, 1, kCenter));
  return numerics::reshape(center, {batch, projected.dim(0) / batch, token_width_});
}

template <typename T>
Tensor<T> TemporalAdapter<T>::spatial_refine(const Tensor<T>& tokens) const {
  if (tokens.rank() != 3 || tokens.dim(2) != token_width_) {
    throw ShapeError("spatial_refine: expected [B, L, " + std::to_string(token_width_) + "], got " +
                     numerics::shape_string(tokens.shape()));
  }
  return spatial_.forward(tokens, false, nullptr);
}

template <typename T>
FusedTokens<T> TemporalAdapter<T>::gate_fuse(const Tensor<T>& h_temporal, const Tensor<T>& h_single,
                                             std::optional<double> forced_gate) const {
  if (h_temporal.shape() != h_single.shape() || h_temporal.rank() != 3) {
    throw ShapeError("gate_fuse: shapes " + numerics::shape_string(h_temporal.shape()) + " and " +
                     numerics::shape_string(h_single.shape()) + " must match as [B, L, D]");
  }
  const std::size_t batch = h_temporal.dim(0);
  const std::size_t len = h_temporal.dim(1);
  Tensor<T> g;
  if (forced_gate) {
    g = Tensor<T>::full({batch, len, 1}, static_cast<T>(*forced_gate));
  } else {
    g = numerics::sigmoid(gate_(h_temporal));
  }
  auto one_minus = numerics::affine(g, T(-1), T(1));
  FusedTokens<T> out;
  out.h_center = numerics::add(numerics::scale_rows(h_temporal, g), numerics::scale_rows(h_single, one_minus));
  out.diag.g = g;
  out.diag.penalty = numerics::mean(numerics::mul(g, one_minus));
  auto gv = g.values();
  double total = 0.0;
  out.diag.per_sample_penalty.assign(batch, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    double acc = 0.0;
    for (std::size_t l = 0; l < len; ++l) {
      const double v = gv[b * len + l];
      acc += v * (1.0 - v);
      total += v;
    }
    out.diag.per_sample_penalty[b] = acc / static_cast<double>(len);
  }
  out.diag.mean_gate = total / static_cast<double>(batch * len);
  return out;
}

template <typename T>
FusedTokens<T> TemporalAdapter<T>::forward(const WindowTokens<T>& window, bool training, Rng* rng,
                                           std::optional<double> forced_gate) const {
  const std::size_t batch = window.tokens.dim(0);
  auto h_temporal = spatial_refine(temporal_attend(project_tokens(window), batch, training, rng));
  auto h_single = numerics::select(window.tokens, 1, kCenter);
  return gate_fuse(h_temporal, h_single, forced_gate);
}

template <typename T>
void TemporalAdapter<T>::collect(numerics::ParameterList<T>& out) const {
  w_in_.collect("adapter.w_in", out);
  in_norm_.collect("adapter.in_norm", out);
  out.push_back({"adapter.e_pos", e_pos_});
  for (std::size_t i = 0; i < temporal_layers_.size(); ++i) {
    temporal_layers_[i].collect("adapter.temporal." + std::to_string(i), out);
  }
  w_out_.collect("adapter.w_out", out);
  spatial_.collect("adapter.spatial", out);
  gate_.collect("adapter.gate", out);
}

template <typename T>
std::size_t TemporalAdapter<T>::parameter_count(const AdapterConfig& c, std::size_t dv) {
  const std::size_t dp = c.proj_width;
  return dv * dp + 2 * dp + kWindow * dp + c.temporal_depth * TransformerLayer<T>::parameter_count(dp, c.mlp_ratio) +
         dp * dv + TransformerLayer<T>::parameter_count(dv, c.mlp_ratio) + dv + 1;
}

template class TemporalAdapter<float>;
template class TemporalAdapter<double>;

}  // namespace slicegate::adapter
