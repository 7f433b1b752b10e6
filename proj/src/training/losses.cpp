// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include "slicegate/training/losses.hpp"

#include <stdexcept>

#include "slicegate/numerics/ops.hpp"

namespace slicegate::training {

template <typename T>
Tensor<T> bce_loss(const Tensor<T>& logits, const Tensor<T>& target) {
  return numerics::bce_with_logits(logits, target);
}

template <typename T>
Tensor<T> dice_loss(const Tensor<T>& probs, const Tensor<T>& target, double smooth) {
  return numerics::soft_dice_loss(probs, target, smooth);
}

template <typename T>
LossTerms<T> total_loss(const Tensor<T>& logits, const Tensor<T>& target, const adapter::GateDiagnostics<T>* gate,
                        double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("lambda_gate must be non-negative");
  LossTerms<T> out;
  auto bce = bce_loss(logits, target);
  auto dice = dice_loss(numerics::sigmoid(logits), target);
  out.bce = static_cast<double>(bce.item());
  out.dice = static_cast<double>(dice.item());
  out.total = numerics::add(bce, dice);
  if (gate) {
    out.penalty = static_cast<double>(gate->penalty.item());
    if (lambda > 0.0) out.total = numerics::add(out.total, numerics::affine(gate->penalty, static_cast<T>(lambda), T(0)));
  }
  return out;
}

template Tensor<float> bce_loss(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> bce_loss(const Tensor<double>&, const Tensor<double>&);
template Tensor<float> dice_loss(const Tensor<float>&, const Tensor<float>&, double);
template Tensor<double> dice_loss(const Tensor<double>&, const Tensor<double>&, double);
template LossTerms<float> total_loss(const Tensor<float>&, const Tensor<float>&, const adapter::GateDiagnostics<float>*,
                                     double);
template LossTerms<double> total_loss(const Tensor<double>&, const Tensor<double>&,
                                      const adapter::GateDiagnostics<double>*, double);

}  // namespace slicegate::training
