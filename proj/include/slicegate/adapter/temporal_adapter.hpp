// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Temporal adapter: per-token attention across a 5-slice window, a spatial
// refinement layer over the center slice, and a sigmoid gate that blends the
// result with the single-slice tokens.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"
#include "slicegate/numerics/layers.hpp"

namespace slicegate::adapter {

using numerics::Rng;
using numerics::Tensor;

inline constexpr std::size_t kWindow = 5;
inline constexpr std::size_t kCenter = 2;

struct AdapterConfig {
  std::size_t proj_width = 32;  // D_proj
  std::size_t temporal_depth = 4;
  std::size_t heads = 4;
  std::size_t mlp_ratio = 4;
  double max_drop_path = 0.1;
  double gate_bias_init = -5.0;

  void validate(std::size_t token_width) const;
};

void to_json(nlohmann::json& j, const AdapterConfig& c);
void from_json(const nlohmann::json& j, AdapterConfig& c);

/// Linearly spaced drop-path rates from 0 to max_rate, both endpoints included.
std::vector<double> drop_path_schedule(std::size_t depth, double max_rate);

/// tokens[B, 5, L, D_v]; slice_indices holds the source z of every window
/// position (empty when unknown).
template <typename T>
struct WindowTokens {
  Tensor<T> tokens;
  std::vector<std::array<std::int64_t, kWindow>> slice_indices;
};

template <typename T>
struct GateDiagnostics {
  Tensor<T> g;        // [B, L, 1]
  Tensor<T> penalty;  // scalar: mean of g(1 - g) over tokens and batch
  std::vector<double> per_sample_penalty;
  double mean_gate = 0.0;
};

template <typename T>
struct FusedTokens {
  Tensor<T> h_center;  // [B, L, D_v]
  GateDiagnostics<T> diag;
};

template <typename T>
class TemporalAdapter {
 public:
  static TemporalAdapter init(const AdapterConfig& config, std::size_t token_width, Rng& rng);

  const AdapterConfig& config() const { return config_; }

  /// [B, 5, L, D_v] -> [B*L, 5, D_proj]: LN(W_in x) + e_pos.
  Tensor<T> project_tokens(const WindowTokens<T>& window) const;

  /// Temporal layers over the window axis, center position, W_out: [B, L, D_v].
  Tensor<T> temporal_attend(const Tensor<T>& projected, std::size_t batch, bool training, Rng* rng) const;

  /// One pre-norm layer over the token axis of [B, L, D_v].
  Tensor<T> spatial_refine(const Tensor<T>& tokens) const;

  /// g = sigmoid(W_g h_temporal + b_g) per token; h = g h_temporal + (1 - g) h_single.
  /// A forced gate replaces g by a constant.
  FusedTokens<T> gate_fuse(const Tensor<T>& h_temporal, const Tensor<T>& h_single,
                           std::optional<double> forced_gate = std::nullopt) const;

  /// Full adapter path; h_single is the center window position.
  FusedTokens<T> forward(const WindowTokens<T>& window, bool training, Rng* rng,
                         std::optional<double> forced_gate = std::nullopt) const;

  void collect(numerics::ParameterList<T>& out) const;  // names start with "adapter."

  const Tensor<T>& position_embedding() const { return e_pos_; }  // [5, D_proj]
  const Tensor<T>& gate_weight() const { return gate_.weight; }   // [D_v, 1]
  const Tensor<T>& gate_bias() const { return gate_.bias; }       // [1]
  const std::vector<numerics::TransformerLayer<T>>& temporal_layers() const { return temporal_layers_; }

  static std::size_t parameter_count(const AdapterConfig& config, std::size_t token_width);

 private:
  AdapterConfig config_;
  std::size_t token_width_ = 0;
  numerics::Linear<T> w_in_;
  numerics::LayerNorm<T> in_norm_;
  Tensor<T> e_pos_;
  std::vector<numerics::TransformerLayer<T>> temporal_layers_;
  numerics::Linear<T> w_out_;
  numerics::TransformerLayer<T> spatial_;
  numerics::Linear<T> gate_;
};

}  // namespace slicegate::adapter
