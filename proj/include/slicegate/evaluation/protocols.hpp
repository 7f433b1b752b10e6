// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Evaluation protocols: in-domain Dice with slice-level false positives,
// prompt corruption, and zero-shot transfer to other domains.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slicegate/adapter/segmentation_model.hpp"
#include "slicegate/data/volume.hpp"
#include "slicegate/evaluation/metrics.hpp"
#include "slicegate/evaluation/predict.hpp"

namespace slicegate::evaluation {

struct ClassConsistency {
  std::string class_name;
  std::size_t absent_slices = 0;
  std::size_t flagged_slices = 0;
  std::optional<double> fp_slice_rate;  // pooled over volumes; empty when no slice lacks the class
};

struct ConsistencyReport {
  std::size_t tau_area = kDefaultTauArea;
  std::vector<ClassConsistency> per_class;

  std::optional<double> rate(const std::string& class_name) const;
};

struct EvaluationResult {
  DiceReport dice;
  ConsistencyReport consistency;
  std::optional<double> mean_gate;  // temporal model: mean over all tokens and slices
};

struct EvaluateOptions {
  /// prompts[k] is sent when scoring class k; defaults to the class names.
  std::optional<std::vector<std::string>> prompts;
  std::size_t tau_area = kDefaultTauArea;
  PredictionTrace* trace = nullptr;
};

/// Scores every (volume, class) pair. `class_names[k]` has label id k + 1.
template <typename T>
EvaluationResult evaluate(const adapter::SegmentationModel<T>& model, const std::vector<data::PreparedVolume>& volumes,
                          const std::vector<std::string>& class_names, const EvaluateOptions& options = {});

/// One evaluation per prompt list, sharing the per-volume token cache.
template <typename T>
std::vector<EvaluationResult> evaluate_prompt_sets(const adapter::SegmentationModel<T>& model,
                                                   const std::vector<data::PreparedVolume>& volumes,
                                                   const std::vector<std::string>& class_names,
                                                   const std::vector<std::vector<std::string>>& prompt_sets,
                                                   std::size_t tau_area = kDefaultTauArea,
                                                   PredictionTrace* trace = nullptr);

enum class AblationMode { blank, wrong };
std::string to_string(AblationMode mode);
/// Throws std::invalid_argument for anything but "blank" or "wrong".
AblationMode parse_ablation_mode(const std::string& text);

struct AblationReport {
  AblationMode mode = AblationMode::blank;
  std::vector<std::string> class_names;
  std::vector<std::string> prompts;  // what each class was queried with
  DiceReport correct;
  DiceReport corrupted;
  double relative_change = 0.0;  // (corrupted - correct) / correct
};

/// Prompts sent for each class under an ablation mode.
std::vector<std::string> ablation_prompts(const std::vector<std::string>& class_names, AblationMode mode);

/// Blank queries the BLANK prompt for every class; wrong queries the
/// derangement of the class names. Dice is always scored against the true
/// class's GT.
template <typename T>
AblationReport prompt_ablation(const adapter::SegmentationModel<T>& model,
                               const std::vector<data::PreparedVolume>& volumes,
                               const std::vector<std::string>& class_names, AblationMode mode,
                               PredictionTrace* trace = nullptr);

struct CrossDomainReport {
  std::string domain;
  DiceReport reference;  // train-domain test report
  DiceReport report;
  double relative_drop = 0.0;
};

/// Evaluates the model unchanged on another domain and compares against the
/// train-domain reference report.
template <typename T>
CrossDomainReport cross_domain_eval(const adapter::SegmentationModel<T>& model, const DiceReport& reference,
                                    const std::vector<data::PreparedVolume>& domain_volumes,
                                    const std::vector<std::string>& class_names);

}  // namespace slicegate::evaluation
