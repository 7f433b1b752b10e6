// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Intensity normalisation to [0, 255]: a fixed CT window and a per-volume
// percentile window for MR-like data.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "slicegate/data/volume.hpp"

namespace slicegate::data {

inline constexpr double kCtWindowLow = -125.0;
inline constexpr double kCtWindowHigh = 275.0;

std::vector<float> preprocess_ct(std::span<const float> raw);

/// Linear-interpolated percentile (numpy's default rule), p in [0, 100].
double percentile(std::span<const float> values, double p);

/// Maps [p1, p99] to [0, 255] after clamping. A volume with p1 == p99 maps to
/// zeros; the warning goes to *warning when given, else to stderr.
std::vector<float> preprocess_mr(std::span<const float> raw, std::string* warning = nullptr);

/// CT window for train/shift volumes, percentile window for modality volumes.
PreparedVolume prepare_volume(const LabeledVolume& volume, std::string* warning = nullptr);

}  // namespace slicegate::data
