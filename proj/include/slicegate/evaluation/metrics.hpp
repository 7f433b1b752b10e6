// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Volumetric Dice, its aggregation over (volume, class) pairs, and the
// slice-level false-positive rate.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace slicegate::evaluation {

/// Probability threshold for foreground.
inline constexpr double kThreshold = 0.5;
/// Predicted area (pixels) above which a GT-absent slice counts as a false positive.
inline constexpr std::size_t kDefaultTauArea = 10;

/// 2|P∩G| / (|P| + |G|) over binary masks; 1 when both are empty. Throws
/// std::invalid_argument on a size mismatch.
double volume_dice(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt);

struct SliceCounts {
  std::size_t absent_slices = 0;   // slices with no GT foreground
  std::size_t flagged_slices = 0;  // of those, predicted area > tau
};

SliceCounts false_positive_slices(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt,
                                  std::size_t depth, std::size_t tau_area = kDefaultTauArea);

/// Fraction of GT-absent slices whose predicted area exceeds tau; empty when
/// no slice is GT-absent.
std::optional<double> fp_slice_rate(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt,
                                    std::size_t depth, std::size_t tau_area = kDefaultTauArea);

struct PairDice {
  std::string volume_id;
  std::string class_name;
  double dice = 0.0;
  bool gt_present = false;  // decides inclusion in the means
};

struct ClassMean {
  std::string class_name;
  std::optional<double> mean;  // empty when no volume contains the class
  std::size_t volumes = 0;
};

struct DiceReport {
  std::string model_kind;
  std::string domain;
  std::vector<PairDice> pairs;  // sorted by (volume_id, class order)
  std::vector<ClassMean> per_class;
  double mean = 0.0;
  std::size_t included_pairs = 0;

  std::optional<double> class_mean(const std::string& class_name) const;
};

/// Means over the pairs whose class is present in that volume's GT. Pairs are
/// re-sorted by volume id, so the result does not depend on input order.
/// Throws std::invalid_argument when no pair is included.
DiceReport aggregate(std::vector<PairDice> pairs, const std::vector<std::string>& class_order,
                     std::string model_kind = {}, std::string domain = {});

/// (reference - other) / reference.
double relative_drop(double reference, double other);

/// Cyclic shift by floor(V/2): no name maps to itself. Throws
/// std::invalid_argument for fewer than two names.
std::vector<std::string> derangement(const std::vector<std::string>& names);

}  // namespace slicegate::evaluation
