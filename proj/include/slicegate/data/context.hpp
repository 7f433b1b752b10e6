// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0
//
// 5-slice context stacks around a center slice, with edge replication, and
// the augmentation that is applied identically to all five slices.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "slicegate/data/synthetic.hpp"
#include "slicegate/data/volume.hpp"
#include "slicegate/numerics/rng.hpp"

namespace slicegate::data {

inline constexpr std::size_t kStackDepth = 5;
inline constexpr std::size_t kStackRadius = 2;

struct ContextStack {
  std::string volume_id;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> slices;  // [5, H, W]
  std::array<std::size_t, kStackDepth> slice_indices{};
  std::size_t center_z = 0;
  std::size_t replicated_count = 0;
  std::string class_name;
  std::uint8_t label = 0;
  std::vector<std::uint8_t> target_mask;  // [H, W], 0/1
  bool is_negative = false;

  std::size_t plane() const { return rows * cols; }
};

/// clamp(z-2 .. z+2, 0, Z-1) and the number of positions that were clamped.
std::array<std::size_t, kStackDepth> context_indices(std::size_t z, std::size_t depth,
                                                     std::size_t* replicated_count = nullptr);

/// `label` is the class id (position in the class table + 1).
ContextStack extract_context_stack(const PreparedVolume& volume, std::size_t z, const std::string& class_name,
                                   std::uint8_t label);

/// Rotation about the slice center followed by an optional horizontal flip.
/// Images are resampled bilinearly with edge clamping, the mask by nearest
/// neighbour with zero fill.
ContextStack apply_transform(const ContextStack& stack, double angle_degrees, bool flip);

struct AugmentParams {
  double angle_degrees = 0.0;
  bool flip = false;
  bool fell_back = false;  // a positive mask vanished, so the stack was kept as is
};

inline constexpr double kMaxRotationDegrees = 5.0;

/// Draws one angle in [-5, 5] degrees and one flip coin (p = 0.5). The flip is
/// applied only when the class is not lateralized.
ContextStack augment_stack(const ContextStack& stack, bool lateralized, numerics::Rng& rng,
                           AugmentParams* params = nullptr);

}  // namespace slicegate::data
