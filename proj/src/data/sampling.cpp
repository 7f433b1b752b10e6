// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include "slicegate/data/sampling.hpp"

#include <algorithm>
#include <stdexcept>

namespace slicegate::data {

std::size_t SampleIndex::positives(std::size_t class_index) const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [&](const SampleEntry& e) {
    return e.class_index == class_index && !e.is_negative;
  }));
}

std::size_t SampleIndex::negatives(std::size_t class_index) const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [&](const SampleEntry& e) {
    return e.class_index == class_index && e.is_negative;
  }));
}

double SampleIndex::weighted_negative_fraction() const {
  double neg = 0.0, total = 0.0;
  for (const auto& e : entries) {
    total += e.sampling_weight;
    if (e.is_negative) neg += e.sampling_weight;
  }
  return total > 0.0 ? neg / total : 0.0;
}

SampleIndex build_sample_index(const std::vector<PreparedVolume>& volumes, const std::vector<ClassSpec>& classes,
                               std::uint64_t seed) {
  SampleIndex index;
  numerics::Rng root(seed);
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const auto label = static_cast<std::uint8_t>(k + 1);
    std::vector<std::pair<std::size_t, std::size_t>> pos, neg;
    for (std::size_t v = 0; v < volumes.size(); ++v) {
      for (std::size_t z = 0; z < volumes[v].depth; ++z) {
        (volumes[v].slice_has(z, label) ? pos : neg).emplace_back(v, z);
      }
    }
    if (pos.empty()) {
      throw std::invalid_argument("class '" + classes[k].name + "' has no positive slice in the training corpus");
    }
    const std::size_t want = (pos.size() + 2) / 3;
    if (neg.size() < want) {
      throw std::invalid_argument("class '" + classes[k].name + "' needs " + std::to_string(want) +
                                  " negative slices but the corpus has " + std::to_string(neg.size()));
    }
    // Partial Fisher-Yates: the first `want` positions are a uniform sample.
    numerics::Rng rng = root.fork(k);
    for (std::size_t i = 0; i < want; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(neg.size() - i));
      std::swap(neg[i], neg[j]);
    }
    neg.resize(want);
    std::sort(neg.begin(), neg.end());
    const double w = classes[k].sampling_weight;
    for (const auto& [v, z] : pos) index.entries.push_back({v, volumes[v].volume_id, z, k, classes[k].name, false, w});
    for (const auto& [v, z] : neg) index.entries.push_back({v, volumes[v].volume_id, z, k, classes[k].name, true, w});
  }
  return index;
}

WeightedSampler::WeightedSampler(const SampleIndex& index) {
  if (index.entries.empty()) throw std::invalid_argument("cannot sample from an empty index");
  cumulative_.reserve(index.entries.size());
  double acc = 0.0;
  for (const auto& e : index.entries) {
    if (!(e.sampling_weight > 0.0)) throw std::invalid_argument("sample weights must be positive");
    acc += e.sampling_weight;
    cumulative_.push_back(acc);
  }
}

std::size_t WeightedSampler::draw(numerics::Rng& rng) const {
  const double u = rng.uniform() * cumulative_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return std::min(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
}

Batch sample_batch(const SampleIndex& index, const WeightedSampler& sampler,
                   const std::vector<PreparedVolume>& volumes, const std::vector<ClassSpec>& classes,
                   std::size_t batch_size, numerics::Rng& rng, bool augment) {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be at least 1");
  if (index.entries.empty()) throw std::invalid_argument("cannot sample from an empty index");
  Batch b;
  for (std::size_t i = 0; i < batch_size; ++i) {
    const std::size_t e = sampler.draw(rng);
    const auto& entry = index.entries[e];
    auto stack = extract_context_stack(volumes.at(entry.volume), entry.z, entry.class_name,
                                       static_cast<std::uint8_t>(entry.class_index + 1));
    if (augment) stack = augment_stack(stack, classes.at(entry.class_index).lateralized, rng);
    b.stacks.push_back(std::move(stack));
    b.entries.push_back(e);
  }
  return b;
}

}  // namespace slicegate::data
