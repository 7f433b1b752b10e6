// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include "slicegate/evaluation/metrics.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace slicegate::evaluation {

double volume_dice(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt) {
  if (pred.size() != gt.size()) {
    throw std::invalid_argument("volume_dice: prediction has " + std::to_string(pred.size()) +
                                " voxels, ground truth " + std::to_string(gt.size()));
  }
  std::size_t p = 0, g = 0, both = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool a = pred[i] != 0, b = gt[i] != 0;
    p += a;
    g += b;
    both += a && b;
  }
  if (p + g == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(p + g);
}

SliceCounts false_positive_slices(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt,
                                  std::size_t depth, std::size_t tau_area) {
  if (pred.size() != gt.size()) throw std::invalid_argument("fp_slice_rate: shape mismatch");
  if (depth == 0 || pred.size() % depth != 0) throw std::invalid_argument("fp_slice_rate: bad depth");
  const std::size_t plane = pred.size() / depth;
  SliceCounts out;
  for (std::size_t z = 0; z < depth; ++z) {
    const auto g = gt.subspan(z * plane, plane);
    if (std::any_of(g.begin(), g.end(), [](std::uint8_t v) { return v != 0; })) continue;
    ++out.absent_slices;
    const auto p = pred.subspan(z * plane, plane);
    const auto area = static_cast<std::size_t>(std::count_if(p.begin(), p.end(), [](std::uint8_t v) { return v != 0; }));
    if (area > tau_area) ++out.flagged_slices;
  }
  return out;
}

std::optional<double> fp_slice_rate(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt,
                                    std::size_t depth, std::size_t tau_area) {
  const auto c = false_positive_slices(pred, gt, depth, tau_area);
  if (c.absent_slices == 0) return std::nullopt;
  return static_cast<double>(c.flagged_slices) / static_cast<double>(c.absent_slices);
}

std::optional<double> DiceReport::class_mean(const std::string& class_name) const {
  for (const auto& c : per_class) {
    if (c.class_name == class_name) return c.mean;
  }
  return std::nullopt;
}

DiceReport aggregate(std::vector<PairDice> pairs, const std::vector<std::string>& class_order, std::string model_kind,
                     std::string domain) {
  std::map<std::string, std::size_t> rank;
  for (std::size_t i = 0; i < class_order.size(); ++i) rank[class_order[i]] = i;
  for (const auto& p : pairs) {
    if (!rank.count(p.class_name)) throw std::invalid_argument("aggregate: unknown class '" + p.class_name + "'");
    if (!(p.dice >= 0.0 && p.dice <= 1.0)) throw std::invalid_argument("aggregate: dice outside [0, 1]");
  }
  std::sort(pairs.begin(), pairs.end(), [&](const PairDice& a, const PairDice& b) {
    if (a.volume_id != b.volume_id) return a.volume_id < b.volume_id;
    return rank[a.class_name] < rank[b.class_name];
  });
  DiceReport r;
  r.model_kind = std::move(model_kind);
  r.domain = std::move(domain);
  std::vector<double> sums(class_order.size(), 0.0);
  std::vector<std::size_t> counts(class_order.size(), 0);
  double total = 0.0;
  for (const auto& p : pairs) {
    if (!p.gt_present) continue;
    sums[rank[p.class_name]] += p.dice;
    ++counts[rank[p.class_name]];
    total += p.dice;
    ++r.included_pairs;
  }
  if (r.included_pairs == 0) throw std::invalid_argument("aggregate: no (volume, class) pair has ground truth");
  for (std::size_t k = 0; k < class_order.size(); ++k) {
    ClassMean c{class_order[k], std::nullopt, counts[k]};
    if (counts[k] > 0) c.mean = sums[k] / static_cast<double>(counts[k]);
    r.per_class.push_back(std::move(c));
  }
  r.mean = total / static_cast<double>(r.included_pairs);
  r.pairs = std::move(pairs);
  return r;
}

double relative_drop(double reference, double other) {
  if (reference == 0.0) throw std::invalid_argument("relative_drop: reference mean is zero");
  return (reference - other) / reference;
}

std::vector<std::string> derangement(const std::vector<std::string>& names) {
  if (names.size() < 2) throw std::invalid_argument("wrong-prompt ablation needs at least two class names");
  const std::size_t shift = names.size() / 2;
  std::vector<std::string> out(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) out[i] = names[(i + shift) % names.size()];
  return out;
}

}  // namespace slicegate::evaluation
