// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0
//
// The training sample index (all positive slices plus seeded negatives) and
// the weighted sampler that draws batches from it.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slicegate/data/context.hpp"
#include "slicegate/data/synthetic.hpp"
#include "slicegate/data/volume.hpp"
#include "slicegate/numerics/rng.hpp"

namespace slicegate::data {

struct SampleEntry {
  std::size_t volume = 0;  // position in the volume list the index was built from
  std::string volume_id;
  std::size_t z = 0;
  std::size_t class_index = 0;  // label id - 1
  std::string class_name;
  bool is_negative = false;
  double sampling_weight = 1.0;
};

struct SampleIndex {
  std::vector<SampleEntry> entries;

  std::size_t positives(std::size_t class_index) const;
  std::size_t negatives(std::size_t class_index) const;
  /// Share of negatives in a weighted draw.
  double weighted_negative_fraction() const;
};

/// Per class: every slice containing the class, plus ceil(P/3) slices without
/// it drawn without replacement from the whole corpus. Throws
/// std::invalid_argument when a class has no positive slice.
SampleIndex build_sample_index(const std::vector<PreparedVolume>& volumes, const std::vector<ClassSpec>& classes,
                               std::uint64_t seed);

/// Draws entry positions with replacement, probability proportional to weight.
class WeightedSampler {
 public:
  explicit WeightedSampler(const SampleIndex& index);
  std::size_t draw(numerics::Rng& rng) const;
  std::size_t size() const { return cumulative_.size(); }

 private:
  std::vector<double> cumulative_;
};

struct Batch {
  std::vector<ContextStack> stacks;
  std::vector<std::size_t> entries;
};

Batch sample_batch(const SampleIndex& index, const WeightedSampler& sampler,
                   const std::vector<PreparedVolume>& volumes, const std::vector<ClassSpec>& classes,
                   std::size_t batch_size, numerics::Rng& rng, bool augment = true);

}  // namespace slicegate::data
