// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Parameter groups with per-module learning rates, the epoch loop, and
// checkpoint selection by validation Dice.

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "slicegate/adapter/segmentation_model.hpp"
#include "slicegate/data/synthetic.hpp"
#include "slicegate/data/volume.hpp"
#include "slicegate/numerics/optim.hpp"
#include "slicegate/training/config.hpp"

namespace slicegate::training {

/// encoder.* and prompt.* -> "encoder", decoder.* -> "decoder",
/// adapter.* -> "adapter". Groups without parameters are omitted, so a
/// baseline model yields two. Throws std::invalid_argument on a parameter
/// without a known prefix.
template <typename T>
std::vector<numerics::ParamGroup<T>> make_param_groups(const numerics::ParameterList<T>& parameters,
                                                       const TrainConfig& config);

/// Name of the group a parameter belongs to; throws for unknown prefixes.
std::string parameter_group(const std::string& name);

struct CheckpointRecord {
  std::size_t epoch = 0;
  double val_mean_dice = 0.0;
  std::filesystem::path path;
};

/// Index of the highest value; ties go to the earliest. Throws on empty input.
std::size_t select_best(const std::vector<double>& val_mean_dice);

struct EpochRecord {
  std::size_t epoch = 0;
  double loss_total = 0.0;
  double loss_bce = 0.0;
  double loss_dice = 0.0;
  double loss_gate = 0.0;
  std::optional<double> train_mean_gate;
  std::optional<double> lens_positive_gate;  // mean g over positive samples of the lens-archetype class
  double val_mean_dice = 0.0;
  std::vector<std::optional<double>> val_class_dice;
  std::optional<double> val_mean_gate;
};

struct StepInfo {
  std::size_t epoch = 0;
  std::size_t step = 0;         // within the epoch
  std::size_t global_step = 0;  // 1-based optimizer step
  double loss_total = 0.0;
  double loss_bce = 0.0;
  double loss_dice = 0.0;
  double loss_gate = 0.0;
};

struct TrainHooks {
  std::function<void(const StepInfo&)> on_step;
  /// Called with the model right after the optimizer step.
  std::function<void(const StepInfo&, const adapter::SegmentationModel<float>&)> after_step;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainData {
  std::vector<data::ClassSpec> classes;
  std::vector<data::PreparedVolume> train;
  std::vector<data::PreparedVolume> val;
  std::string dataset;  // provenance for the run manifest
};

struct TrainResult {
  CheckpointRecord best;
  std::vector<EpochRecord> epochs;
  std::filesystem::path metrics_log;
  std::filesystem::path last_checkpoint;
  std::filesystem::path run_manifest;
  std::optional<double> initial_gate;  // sigma(b_g) at initialisation
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs config.epochs epochs of config.steps_per_epoch weighted-sampled
/// batches, validates after every epoch, and writes metrics.csv, last.ckpt,
/// best.ckpt and run_manifest.json into `out_dir`. A non-finite value in the
/// forward or backward pass aborts with TrainingError naming the batch.
TrainResult train(const TrainConfig& config, const TrainData& data, const std::filesystem::path& out_dir,
                  const TrainHooks& hooks = {});

/// Loads the train/val splits of the train domain from a dataset manifest.
TrainData load_train_data(const std::filesystem::path& manifest);

/// CSV header of the metrics log for a class table.
std::string metrics_header(const std::vector<std::string>& class_names);

}  // namespace slicegate::training
