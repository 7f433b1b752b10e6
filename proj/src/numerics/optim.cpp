// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include "slicegate/numerics/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace slicegate::numerics {

template <typename T>
void AdamW<T>::step(std::vector<ParamGroup<T>>& groups, std::size_t step) {
  if (step == 0) throw std::invalid_argument("AdamW: step numbering starts at 1");
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(step));

  for (auto& group : groups) {
    for (auto& param : group.parameters) {
      if (!param.has_grad()) {
        throw std::logic_error("AdamW: parameter in group '" + group.name + "' has no gradient");
      }
    }
  }
  for (auto& group : groups) {
    const double lr = group.learning_rate;
    const double decay = 1.0 - lr * group.weight_decay;
    for (auto& param : group.parameters) {
      auto& mom = moments_[param.node().get()];
      auto values = param.mutable_values();
      auto grad = param.grad();
      if (mom.m.empty()) {
        mom.m.assign(values.size(), 0.0);
        mom.v.assign(values.size(), 0.0);
      }
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double g = grad[i];
        mom.m[i] = b1 * mom.m[i] + (1.0 - b1) * g;
        mom.v[i] = b2 * mom.v[i] + (1.0 - b2) * g * g;
        if (lr == 0.0) continue;
        const double m_hat = mom.m[i] / bias1;
        const double v_hat = mom.v[i] / bias2;
        double p = values[i];
        if (group.weight_decay > 0.0) p *= decay;
        p -= lr * m_hat / (std::sqrt(v_hat) + config_.eps);
        values[i] = static_cast<T>(p);
      }
    }
  }
}

double epoch_in_cycle(const SchedulerState& state, double epoch) {
  if (epoch < 0.0) throw std::invalid_argument("lr_at_epoch: epoch must be non-negative");
  if (state.t0 <= 0.0) throw std::invalid_argument("lr_at_epoch: cycle length must be positive");
  double t = std::fmod(epoch, state.t0);
  if (t < 0.0 || t >= state.t0) t = 0.0;
  return t;
}

std::vector<double> lr_at_epoch(const SchedulerState& state, double epoch) {
  const double t = epoch_in_cycle(state, epoch);
  const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * t / state.t0));
  std::vector<double> out;
  out.reserve(state.base_lr_per_group.size());
  for (double base : state.base_lr_per_group) {
    out.push_back(state.eta_min + (base - state.eta_min) * cosine);
  }
  return out;
}

template class AdamW<float>;
template class AdamW<double>;

}  // namespace slicegate::numerics
