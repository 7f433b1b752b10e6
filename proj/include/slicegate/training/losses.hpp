// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Segmentation loss: BCE + soft Dice with unit weights, plus the gate penalty.

#pragma once

#include "slicegate/adapter/temporal_adapter.hpp"
#include "slicegate/numerics/tensor.hpp"

namespace slicegate::training {

using numerics::Tensor;

inline constexpr double kDiceSmooth = 1e-6;

/// Mean per-pixel binary cross-entropy on logits (log-sum-exp form).
template <typename T>
Tensor<T> bce_loss(const Tensor<T>& logits, const Tensor<T>& target);

/// 1 - (2 Σpt + s) / (Σp + Σt + s) per sample, averaged over a leading batch axis.
template <typename T>
Tensor<T> dice_loss(const Tensor<T>& probs, const Tensor<T>& target, double smooth = kDiceSmooth);

template <typename T>
struct LossTerms {
  Tensor<T> total;
  double bce = 0.0;
  double dice = 0.0;
  double penalty = 0.0;  // unweighted mean g(1 - g)
};

/// bce + dice + lambda * penalty. A null `gate` (baseline model) contributes
/// no penalty.
template <typename T>
LossTerms<T> total_loss(const Tensor<T>& logits, const Tensor<T>& target, const adapter::GateDiagnostics<T>* gate,
                        double lambda);

}  // namespace slicegate::training
