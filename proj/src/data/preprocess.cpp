// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include "slicegate/data/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace slicegate::data {

std::vector<float> preprocess_ct(std::span<const float> raw) {
  std::vector<float> out(raw.size());
  const double scale = 255.0 / (kCtWindowHigh - kCtWindowLow);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double x = std::clamp(static_cast<double>(raw[i]), kCtWindowLow, kCtWindowHigh);
    out[i] = static_cast<float>((x - kCtWindowLow) * scale);
  }
  return out;
}

double percentile(std::span<const float> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty volume");
  if (!(p >= 0.0 && p <= 100.0)) throw std::invalid_argument("percentile must be in [0, 100]");
  std::vector<float> v(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  double b = a;
  if (hi != lo) b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
  return a + (pos - static_cast<double>(lo)) * (b - a);
}

std::vector<float> preprocess_mr(std::span<const float> raw, std::string* warning) {
  const double p1 = percentile(raw, 1.0);
  const double p99 = percentile(raw, 99.0);
  std::vector<float> out(raw.size(), 0.0f);
  if (!(p99 > p1)) {
    const std::string msg = "preprocess_mr: degenerate volume (p1 == p99 == " + std::to_string(p1) +
                            "), output set to zero";
    if (warning) {
      *warning = msg;
    } else {
      std::cerr << "warning: " << msg << '\n';
    }
    return out;
  }
  const double scale = 255.0 / (p99 - p1);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double x = std::clamp(static_cast<double>(raw[i]), p1, p99);
    out[i] = static_cast<float>((x - p1) * scale);
  }
  return out;
}

PreparedVolume prepare_volume(const LabeledVolume& volume, std::string* warning) {
  volume.validate();
  PreparedVolume p;
  p.volume_id = volume.volume_id;
  p.domain = volume.domain;
  p.depth = volume.depth;
  p.rows = volume.rows;
  p.cols = volume.cols;
  p.labels = volume.labels;
  p.image = volume.domain == Domain::modality ? preprocess_mr(volume.intensities, warning)
                                              : preprocess_ct(volume.intensities);
  return p;
}

}  // namespace slicegate::data
