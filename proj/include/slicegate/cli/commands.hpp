// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "slicegate/adapter/segmentation_model.hpp"
#include "slicegate/cli/run_config.hpp"
#include "slicegate/evaluation/protocols.hpp"
#include "slicegate/training/trainer.hpp"

namespace slicegate::cli {

enum ExitCode : int { kOk = 0, kOtherError = 1, kConfigError = 2, kDataError = 3, kNumericError = 4 };

/// Writes the dataset into `out_dir`; returns the manifest.
data::DatasetManifest cmd_gen_data(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

/// Trains on `dataset` (manifest file or directory) into `out_dir`.
training::TrainResult cmd_train(const RunConfig& config, const std::filesystem::path& dataset,
                                const std::filesystem::path& out_dir, std::ostream& log);

struct EvalRequest {
  std::vector<std::filesystem::path> checkpoints;  // one, or two for a comparison table
  std::filesystem::path dataset;
  data::Domain domain = data::Domain::train;
  std::string split = "test";
  std::optional<adapter::ModelKind> as_kind;
  std::optional<double> forced_gate;
  std::filesystem::path out_dir;
};

/// Files: eval.json, table.txt and pairs_<k>.csv per checkpoint. A non-train
/// domain also reports the drop relative to the train-domain split.
std::vector<evaluation::EvaluationResult> cmd_eval(const RunConfig& config, const EvalRequest& request,
                                                   std::ostream& log);

struct AblateRequest {
  std::filesystem::path checkpoint;
  std::filesystem::path dataset;
  evaluation::AblationMode mode = evaluation::AblationMode::blank;
  std::string split = "test";
  std::filesystem::path out_dir;
};

/// Files: ablation_<mode>.json and ablation_<mode>.txt.
evaluation::AblationReport cmd_ablate(const RunConfig& config, const AblateRequest& request, std::ostream& log);

/// Renders a per-class comparison from two eval.json files (first report of each).
std::string cmd_report(const std::filesystem::path& first, const std::filesystem::path& second,
                       const std::string& first_label, const std::string& second_label,
                       const std::optional<std::filesystem::path>& out);

/// Full command-line entry point; never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace slicegate::cli
