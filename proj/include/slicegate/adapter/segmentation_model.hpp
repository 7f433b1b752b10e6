// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Baseline and temporal models behind one interface. Both consume 5-slice
// context stacks; the baseline only looks at the center slice.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "slicegate/adapter/temporal_adapter.hpp"
#include "slicegate/model/backbone.hpp"
#include "slicegate/model/checkpoint.hpp"

namespace slicegate::adapter {

enum class ModelKind { baseline, temporal };

std::string to_string(ModelKind kind);
/// Throws std::invalid_argument for anything but "baseline" or "temporal".
ModelKind parse_model_kind(const std::string& text);

struct ModelConfig {
  ModelKind kind = ModelKind::temporal;
  model::BackboneConfig backbone;
  AdapterConfig adapter;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

template <typename T>
struct ModelOutput {
  model::MaskLogits<T> logits;
  std::optional<GateDiagnostics<T>> gate;  // temporal model only
};

template <typename T>
class SegmentationModel {
 public:
  /// The backbone and adapter draw from separate forks of `seed`, so a
  /// baseline and a temporal model built from one seed share backbone weights.
  static SegmentationModel init(const ModelConfig& config, std::uint64_t seed);

  ModelKind kind() const { return config_.kind; }
  const ModelConfig& config() const { return config_; }
  const model::Backbone<T>& backbone() const { return backbone_; }
  const TemporalAdapter<T>& temporal_adapter() const;

  /// stacks: B windows of 5 preprocessed slices, [B, 5, H, W] row-major.
  /// `rng` feeds drop-path and is only touched in training mode.
  ModelOutput<T> forward(std::span<const float> stacks, const std::vector<std::string>& class_names, bool training,
                         Rng* rng) const;

  /// The adapter path, whatever the model kind is.
  ModelOutput<T> forward_temporal(std::span<const float> stacks, const std::vector<std::string>& class_names,
                                  bool training, Rng* rng) const;

  /// The single-slice path on the center slice of each stack.
  ModelOutput<T> forward_single(std::span<const float> stacks, const std::vector<std::string>& class_names) const;

  /// Replaces the learned gate by a constant in every temporal forward pass.
  void set_forced_gate(std::optional<double> value) { forced_gate_ = value; }
  std::optional<double> forced_gate() const { return forced_gate_; }

  numerics::ParameterList<T> parameters() const;

 private:
  ModelConfig config_;
  model::Backbone<T> backbone_;
  std::optional<TemporalAdapter<T>> adapter_;
  std::optional<double> forced_gate_;
};

/// Center slices [B, H, W] pulled out of [B, 5, H, W] stacks.
std::vector<float> center_slices(std::span<const float> stacks, std::size_t batch, std::size_t rows,
                                 std::size_t cols);

/// Writes the model's parameters and configuration. `metadata` is stored
/// verbatim; an "init_seed" entry lets a loader rebuild missing adapter
/// weights exactly as initialised.
template <typename T>
void save_model(const std::filesystem::path& path, const SegmentationModel<T>& model, const nlohmann::json& metadata);

/// Loads a checkpoint, optionally as a different model kind. A baseline file
/// loaded as temporal keeps the adapter at its initial values; a temporal
/// file loaded as baseline drops the adapter tensors. Weights are stored in
/// 32-bit; T = double evaluates the same model with 64-bit arithmetic.
template <typename T = float>
SegmentationModel<T> load_model(const std::filesystem::path& path, std::optional<ModelKind> as_kind = std::nullopt,
                                model::LoadSummary* summary = nullptr);

}  // namespace slicegate::adapter
