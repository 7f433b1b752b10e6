// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include "slicegate/data/context.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace slicegate::data {

std::array<std::size_t, kStackDepth> context_indices(std::size_t z, std::size_t depth,
                                                     std::size_t* replicated_count) {
  if (depth == 0) throw std::invalid_argument("context stack from an empty volume");
  if (z >= depth) {
    throw std::out_of_range("slice " + std::to_string(z) + " out of range for depth " + std::to_string(depth));
  }
  std::array<std::size_t, kStackDepth> out{};
  std::size_t clamped = 0;
  for (std::size_t k = 0; k < kStackDepth; ++k) {
    const auto want = static_cast<std::ptrdiff_t>(z + k) - static_cast<std::ptrdiff_t>(kStackRadius);
    const auto got = std::clamp<std::ptrdiff_t>(want, 0, static_cast<std::ptrdiff_t>(depth) - 1);
    if (got != want) ++clamped;
    out[k] = static_cast<std::size_t>(got);
  }
  if (replicated_count) *replicated_count = clamped;
  return out;
}

ContextStack extract_context_stack(const PreparedVolume& volume, std::size_t z, const std::string& class_name,
                                   std::uint8_t label) {
  ContextStack s;
  s.volume_id = volume.volume_id;
  s.rows = volume.rows;
  s.cols = volume.cols;
  s.center_z = z;
  s.slice_indices = context_indices(z, volume.depth, &s.replicated_count);
  s.class_name = class_name;
  s.label = label;
  const std::size_t plane = volume.plane();
  s.slices.resize(kStackDepth * plane);
  for (std::size_t k = 0; k < kStackDepth; ++k) {
    std::copy_n(volume.slice(s.slice_indices[k]), plane, s.slices.begin() + static_cast<std::ptrdiff_t>(k * plane));
  }
  s.target_mask.resize(plane);
  const auto* lab = volume.label_slice(z);
  bool any = false;
  for (std::size_t i = 0; i < plane; ++i) {
    s.target_mask[i] = lab[i] == label ? 1 : 0;
    any = any || s.target_mask[i];
  }
  s.is_negative = !any;
  return s;
}

ContextStack apply_transform(const ContextStack& stack, double angle_degrees, bool flip) {
  const std::size_t H = stack.rows, W = stack.cols, plane = stack.plane();
  ContextStack out = stack;
  const double theta = angle_degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);
  const double cr = (static_cast<double>(H) - 1.0) / 2.0;
  const double cc = (static_cast<double>(W) - 1.0) / 2.0;
  const auto clamp_r = [&](std::ptrdiff_t r) { return std::clamp<std::ptrdiff_t>(r, 0, H - 1); };
  const auto clamp_c = [&](std::ptrdiff_t c) { return std::clamp<std::ptrdiff_t>(c, 0, W - 1); };
  bool any = false;
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      // Output pixel -> undo the flip -> undo the rotation.
      const double oc = flip ? static_cast<double>(W - 1 - c) : static_cast<double>(c);
      const double dr = static_cast<double>(r) - cr, dc = oc - cc;
      const double sr = cr + cs * dr + sn * dc;
      const double sc = cc - sn * dr + cs * dc;
      const auto r0 = static_cast<std::ptrdiff_t>(std::floor(sr));
      const auto c0 = static_cast<std::ptrdiff_t>(std::floor(sc));
      const double fr = sr - static_cast<double>(r0), fc = sc - static_cast<double>(c0);
      const std::size_t ra = clamp_r(r0), rb = clamp_r(r0 + 1), ca = clamp_c(c0), cb = clamp_c(c0 + 1);
      for (std::size_t k = 0; k < kStackDepth; ++k) {
        const float* src = stack.slices.data() + k * plane;
        const double top = src[ra * W + ca] * (1.0 - fc) + src[ra * W + cb] * fc;
        const double bottom = src[rb * W + ca] * (1.0 - fc) + src[rb * W + cb] * fc;
        out.slices[k * plane + r * W + c] = static_cast<float>(top * (1.0 - fr) + bottom * fr);
      }
      const auto nr = static_cast<std::ptrdiff_t>(std::lround(sr));
      const auto nc = static_cast<std::ptrdiff_t>(std::lround(sc));
      std::uint8_t m = 0;
      if (nr >= 0 && nc >= 0 && nr < static_cast<std::ptrdiff_t>(H) && nc < static_cast<std::ptrdiff_t>(W)) {
        m = stack.target_mask[static_cast<std::size_t>(nr) * W + static_cast<std::size_t>(nc)];
      }
      out.target_mask[r * W + c] = m;
      any = any || m;
    }
  }
  out.is_negative = !any;
  return out;
}

ContextStack augment_stack(const ContextStack& stack, bool lateralized, numerics::Rng& rng, AugmentParams* params) {
  AugmentParams p;
  p.angle_degrees = rng.uniform(-kMaxRotationDegrees, kMaxRotationDegrees);
  const bool coin = rng.bernoulli(0.5);
  p.flip = coin && !lateralized;
  ContextStack out = apply_transform(stack, p.angle_degrees, p.flip);
  if (out.is_negative != stack.is_negative) {
    p.fell_back = true;
    out = stack;
  }
  if (params) *params = p;
  return out;
}

}  // namespace slicegate::data
