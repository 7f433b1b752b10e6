// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable tensor operations. All ops work on row-major tensors whose
// last axis is the feature axis; each records its own backward rule.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "slicegate/numerics/rng.hpp"
#include "slicegate/numerics/tensor.hpp"

namespace slicegate::numerics {

inline constexpr double kLayerNormEps = 1e-5;

/// x[..., in] * weight[in, out] (+ bias[out]). Pass an undefined bias to skip it.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

/// x + y where y's shape equals the trailing axes of x.
template <typename T>
Tensor<T> add_broadcast(const Tensor<T>& x, const Tensor<T>& y);

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

/// x[..., D] scaled row-wise by g[..., 1].
template <typename T>
Tensor<T> scale_rows(const Tensor<T>& x, const Tensor<T>& g);

/// alpha * x + beta with constant coefficients.
template <typename T>
Tensor<T> affine(const Tensor<T>& x, T alpha, T beta);

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                     double eps = kLayerNormEps);

/// Exact form x * Phi(x).
template <typename T>
Tensor<T> gelu(const Tensor<T>& x);

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);

/// Optional S x S mask for attention; a nonzero entry (i, j) blocks query i
/// from key j.
struct AttentionMask {
  std::size_t seq = 0;
  std::vector<std::uint8_t> blocked;
};

/// Multi-head scaled dot-product attention over q, k, v of shape [B, S, D].
/// Heads split the feature axis into D / heads contiguous slices.
template <typename T>
Tensor<T> scaled_dot_product_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                       std::size_t heads, const AttentionMask* mask = nullptr);

/// Stochastic depth on a residual branch. Each index of the leading axis is
/// one sample: it is zeroed with probability `rate` or scaled by
/// 1 / (1 - rate). Identity when not training or when rate == 0.
template <typename T>
Tensor<T> drop_path(const Tensor<T>& x, double rate, bool training, Rng& rng);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

/// Swaps axis `axis` with axis `axis + 1`.
template <typename T>
Tensor<T> swap_axes(const Tensor<T>& x, std::size_t axis);

/// Picks `index` along `axis`, removing that axis.
template <typename T>
Tensor<T> select(const Tensor<T>& x, std::size_t axis, std::size_t index);

/// Concatenates along axis 0; trailing axes must agree.
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts);

/// Rows of table[V, D] picked by indices, giving [n, D].
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& table, std::span<const std::size_t> indices);

/// Feature-wise modulation x * (1 + scale) + shift, with x[B, L, D] and
/// scale, shift of shape [B, D].
template <typename T>
Tensor<T> film(const Tensor<T>& x, const Tensor<T>& scale, const Tensor<T>& shift);

/// Patch logits [B, rows*cols, patch*patch] laid back out as [B, rows*patch, cols*patch].
template <typename T>
Tensor<T> unpatchify(const Tensor<T>& x, std::size_t rows, std::size_t cols, std::size_t patch);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);

template <typename T>
Tensor<T> mean(const Tensor<T>& x);

/// Mean binary cross-entropy on logits, log-sum-exp stable.
template <typename T>
Tensor<T> bce_with_logits(const Tensor<T>& logits, const Tensor<T>& target);

/// Soft Dice loss 1 - (2 sum(pt) + s) / (sum(p) + sum(t) + s), computed per
/// leading-axis sample and averaged. A single 2-D map counts as one sample.
template <typename T>
Tensor<T> soft_dice_loss(const Tensor<T>& probs, const Tensor<T>& target, double smooth);

}  // namespace slicegate::numerics
