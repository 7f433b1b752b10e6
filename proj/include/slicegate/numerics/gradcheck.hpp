// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "slicegate/numerics/tensor.hpp"

namespace slicegate::numerics {

struct GradCheckResult {
  bool passed = false;
  double max_relative_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates_checked = 0;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Upper bound on coordinates probed per input; 0 means all of them.
  /// When capped, coordinates are spread evenly over the tensor.
  std::size_t max_coordinates_per_input = 0;
  /// Hook that perturbs the analytic gradient before comparison. Used only to
  /// prove that the harness can fail.
  std::function<void(std::size_t input, std::vector<double>& grad)> corrupt_analytic;
  /// Richardson-extrapolated central differences: truncation error O(h^4),
  /// which allows a larger step and so less cancellation on small gradients.
  bool richardson = false;
};

/// Compares reverse-mode gradients of a scalar function against central
/// differences, coordinate by coordinate, with relative error
/// |a - n| / max(|a|, |n|, 1e-8). `f` must rebuild its graph from `inputs`
/// on every call. Throws NumericError on non-finite gradients.
GradCheckResult grad_check(const std::function<Tensor<double>()>& f, std::vector<Tensor<double>> inputs,
                           const GradCheckOptions& options = {});

}  // namespace slicegate::numerics
