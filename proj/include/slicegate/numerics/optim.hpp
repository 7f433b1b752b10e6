// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "slicegate/numerics/tensor.hpp"

namespace slicegate::numerics {

template <typename T>
struct ParamGroup {
  std::string name;
  std::vector<Tensor<T>> parameters;
  double learning_rate = 0.0;
  double weight_decay = 0.0;
};

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// AdamW with decoupled weight decay:
///   p <- p * (1 - lr * wd);  p <- p - lr * m_hat / (sqrt(v_hat) + eps)
/// Moment buffers are keyed by parameter node, so groups may be rebuilt
/// between steps without losing state.
template <typename T>
class AdamW {
 public:
  explicit AdamW(AdamWConfig config = {}) : config_(config) {}

  /// Applies update number `step` (1-based) using the gradients currently
  /// held by the parameters. Throws std::logic_error if a parameter has no
  /// gradient buffer.
  void step(std::vector<ParamGroup<T>>& groups, std::size_t step);

  const AdamWConfig& config() const { return config_; }

 private:
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };
  AdamWConfig config_;
  std::unordered_map<const Node<T>*, Moments> moments_;
};

struct SchedulerState {
  std::vector<double> base_lr_per_group;
  double t0 = 5.0;  // cycle length in epochs; the multiplier is fixed at 1
  double eta_min = 0.0;
};

/// Cosine annealing with warm restarts evaluated at a fractional epoch.
std::vector<double> lr_at_epoch(const SchedulerState& state, double epoch);

/// Position inside the current cycle, in [0, t0).
double epoch_in_cycle(const SchedulerState& state, double epoch);

}  // namespace slicegate::numerics
