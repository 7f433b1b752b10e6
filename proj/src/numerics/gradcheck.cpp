// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include "slicegate/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace slicegate::numerics {

GradCheckResult grad_check(const std::function<Tensor<double>()>& f, std::vector<Tensor<double>> inputs,
                           const GradCheckOptions& options) {
  for (auto& in : inputs) {
    if (!in.requires_grad()) throw std::invalid_argument("grad_check: every input must require grad");
    in.zero_grad();
  }
  {
    Tensor<double> out = f();
    if (out.size() != 1) throw ShapeError("grad_check: function must return a scalar");
    out.backward();
  }
  std::vector<std::vector<double>> analytic;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto g = inputs[i].grad();
    analytic.emplace_back(g.begin(), g.end());
    if (options.corrupt_analytic) options.corrupt_analytic(i, analytic.back());
    for (double v : analytic.back()) {
      if (!std::isfinite(v)) throw NumericError("grad_check: non-finite analytic gradient");
    }
  }

  GradCheckResult result;
  result.passed = true;
  NoGradGuard no_grad;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto values = inputs[i].mutable_values();
    const std::size_t n = values.size();
    std::size_t count = n;
    if (options.max_coordinates_per_input > 0) count = std::min(n, options.max_coordinates_per_input);
    for (std::size_t c = 0; c < count; ++c) {
      const std::size_t idx = count == n ? c : (c * n) / count;
      const double original = values[idx];
      auto central = [&](double h) {
        values[idx] = original + h;
        const double plus = f().item();
        values[idx] = original - h;
        const double minus = f().item();
        values[idx] = original;
        return (plus - minus) / (2.0 * h);
      };
      const double d1 = central(options.step);
      // (4 D(h) - D(2h)) / 3 cancels the h^2 error term.
      const double numeric = options.richardson ? (4.0 * d1 - central(2.0 * options.step)) / 3.0 : d1;
      if (!std::isfinite(numeric)) throw NumericError("grad_check: non-finite numeric gradient");
      const double a = analytic[i][idx];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      ++result.coordinates_checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_input = i;
        result.worst_index = idx;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  result.passed = result.max_relative_error < options.tolerance;
  return result;
}

}  // namespace slicegate::numerics
