// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"
#include "slicegate/adapter/segmentation_model.hpp"

namespace slicegate::training {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t steps_per_epoch = 20;
  std::size_t batch_size = 8;
  double lambda_gate = 0.001;
  // Base rates; each is multiplied by lr_multiplier.
  double lr_encoder = 1e-6;
  double lr_decoder = 1e-5;
  double lr_adapter = 5e-5;
  double lr_multiplier = 100.0;
  double weight_decay = 1e-4;
  double t0 = 5.0;
  std::uint64_t seed = 0;
  adapter::ModelKind model_kind = adapter::ModelKind::temporal;
  bool augment = true;
  /// Clamps the gate to a constant in every forward pass (diagnostics only).
  std::optional<double> forced_gate;
  /// Checkpoint whose weights replace the seeded initialization before the
  /// first step; parameters it lacks (adapter weights of a baseline
  /// checkpoint) keep their initial values. Empty starts from scratch.
  std::string init_checkpoint;
  model::BackboneConfig backbone;  // vocabulary is taken from the dataset
  adapter::AdapterConfig adapter;

  /// Throws std::invalid_argument on a violated invariant.
  void validate() const;
  adapter::ModelConfig model_config(const std::vector<std::string>& vocabulary) const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Throws std::invalid_argument naming the first key of `j` (recursively into
/// objects) that does not appear in `schema`.
void reject_unknown_keys(const nlohmann::json& j, const nlohmann::json& schema, const std::string& where);

}  // namespace slicegate::training
