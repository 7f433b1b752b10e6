// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Whole-volume prediction. The encoder tokens and, for the temporal model,
// the fused center tokens do not depend on the query, so they are computed
// once per volume and shared by every prompt.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slicegate/adapter/segmentation_model.hpp"
#include "slicegate/data/volume.hpp"

namespace slicegate::evaluation {

/// One record per prompt decoded over a volume.
struct PredictionRecord {
  std::string volume_id;
  std::string target_class;  // the class whose GT the prediction is scored against
  std::string prompt;        // what the model was actually asked
  std::string path;          // "single-slice" or "temporal"
  std::size_t slices = 0;
  std::optional<double> forced_gate;
};

struct PredictionTrace {
  std::vector<PredictionRecord> records;
};

template <typename T>
class VolumePredictor {
 public:
  /// Encodes every slice and, for a temporal model, runs the adapter over all
  /// 5-slice windows (edge-replicated) in evaluation mode.
  VolumePredictor(const adapter::SegmentationModel<T>& model, const data::PreparedVolume& volume);

  /// Logits [Z, H, W] for one prompt.
  std::vector<T> logits(const std::string& prompt) const;

  /// Binary mask: probability above 0.5. `target_class` only feeds the trace.
  std::vector<std::uint8_t> predict(const std::string& prompt, const std::string& target_class,
                                    PredictionTrace* trace = nullptr) const;

  /// Per-slice mean gate value (temporal model only).
  const std::vector<double>& slice_mean_gate() const { return slice_gate_; }
  /// Per-token gate values [Z, L] (temporal model only).
  const std::vector<double>& token_gate() const { return token_gate_; }

 private:
  const adapter::SegmentationModel<T>* model_;
  const data::PreparedVolume* volume_;
  numerics::Tensor<T> center_tokens_;  // [Z, L, Dv]
  std::vector<double> slice_gate_;
  std::vector<double> token_gate_;
};

/// Convenience wrapper: a fresh predictor for one class.
template <typename T>
std::vector<std::uint8_t> predict_volume(const adapter::SegmentationModel<T>& model,
                                         const data::PreparedVolume& volume, const std::string& class_name);

}  // namespace slicegate::evaluation
