// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include "slicegate/evaluation/protocols.hpp"

#include <algorithm>
#include <stdexcept>

#include "slicegate/model/backbone.hpp"

namespace slicegate::evaluation {

std::optional<double> ConsistencyReport::rate(const std::string& class_name) const {
  for (const auto& c : per_class) {
    if (c.class_name == class_name) return c.fp_slice_rate;
  }
  return std::nullopt;
}

std::string to_string(AblationMode mode) { return mode == AblationMode::blank ? "blank" : "wrong"; }

AblationMode parse_ablation_mode(const std::string& text) {
  if (text == "blank") return AblationMode::blank;
  if (text == "wrong") return AblationMode::wrong;
  throw std::invalid_argument("unknown ablation mode '" + text + "' (expected blank or wrong)");
}

template <typename T>
std::vector<EvaluationResult> evaluate_prompt_sets(const adapter::SegmentationModel<T>& model,
                                                   const std::vector<data::PreparedVolume>& volumes,
                                                   const std::vector<std::string>& class_names,
                                                   const std::vector<std::vector<std::string>>& prompt_sets,
                                                   std::size_t tau_area, PredictionTrace* trace) {
  if (volumes.empty()) throw std::invalid_argument("evaluate: no volumes");
  for (const auto& prompts : prompt_sets) {
    if (prompts.size() != class_names.size()) throw std::invalid_argument("evaluate: one prompt per class required");
  }
  // Volumes in id order, so merged results never depend on input order.
  std::vector<const data::PreparedVolume*> order;
  for (const auto& v : volumes) order.push_back(&v);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->volume_id < b->volume_id; });

  const std::size_t sets = prompt_sets.size();
  std::vector<std::vector<PairDice>> pairs(sets);
  std::vector<ConsistencyReport> consistency(sets);
  for (auto& c : consistency) {
    c.tau_area = tau_area;
    for (const auto& name : class_names) c.per_class.push_back({name, 0, 0, std::nullopt});
  }
  double gate_sum = 0.0;
  std::size_t gate_count = 0;
  for (const auto* v : order) {
    const VolumePredictor<T> predictor(model, *v);
    for (double g : predictor.token_gate()) gate_sum += g;
    gate_count += predictor.token_gate().size();
    for (std::size_t k = 0; k < class_names.size(); ++k) {
      const auto label = static_cast<std::uint8_t>(k + 1);
      std::vector<std::uint8_t> gt(v->labels.size());
      for (std::size_t i = 0; i < gt.size(); ++i) gt[i] = v->labels[i] == label ? 1 : 0;
      const bool present = std::find(gt.begin(), gt.end(), 1) != gt.end();
      for (std::size_t s = 0; s < sets; ++s) {
        const auto pred = predictor.predict(prompt_sets[s][k], class_names[k], trace);
        pairs[s].push_back({v->volume_id, class_names[k], volume_dice(pred, gt), present});
        const auto counts = false_positive_slices(pred, gt, v->depth, tau_area);
        consistency[s].per_class[k].absent_slices += counts.absent_slices;
        consistency[s].per_class[k].flagged_slices += counts.flagged_slices;
      }
    }
  }
  std::vector<EvaluationResult> out;
  for (std::size_t s = 0; s < sets; ++s) {
    for (auto& c : consistency[s].per_class) {
      if (c.absent_slices > 0) {
        c.fp_slice_rate = static_cast<double>(c.flagged_slices) / static_cast<double>(c.absent_slices);
      }
    }
    EvaluationResult r{aggregate(std::move(pairs[s]), class_names, adapter::to_string(model.kind()),
                                 data::to_string(order.front()->domain)),
                       std::move(consistency[s]), std::nullopt};
    if (gate_count > 0) r.mean_gate = gate_sum / static_cast<double>(gate_count);
    out.push_back(std::move(r));
  }
  return out;
}

template <typename T>
EvaluationResult evaluate(const adapter::SegmentationModel<T>& model, const std::vector<data::PreparedVolume>& volumes,
                          const std::vector<std::string>& class_names, const EvaluateOptions& options) {
  const auto& prompts = options.prompts ? *options.prompts : class_names;
  return std::move(evaluate_prompt_sets(model, volumes, class_names, {prompts}, options.tau_area, options.trace)[0]);
}

std::vector<std::string> ablation_prompts(const std::vector<std::string>& class_names, AblationMode mode) {
  if (mode == AblationMode::blank) return std::vector<std::string>(class_names.size(), model::kBlankPrompt);
  return derangement(class_names);
}

template <typename T>
AblationReport prompt_ablation(const adapter::SegmentationModel<T>& model,
                               const std::vector<data::PreparedVolume>& volumes,
                               const std::vector<std::string>& class_names, AblationMode mode,
                               PredictionTrace* trace) {
  AblationReport r;
  r.mode = mode;
  r.class_names = class_names;
  r.prompts = ablation_prompts(class_names, mode);
  // Both runs share one evaluation pass; only the prompt list differs.
  auto results = evaluate_prompt_sets(model, volumes, class_names, {class_names, r.prompts}, kDefaultTauArea, trace);
  r.correct = std::move(results[0].dice);
  r.corrupted = std::move(results[1].dice);
  r.relative_change = r.correct.mean > 0.0 ? (r.corrupted.mean - r.correct.mean) / r.correct.mean : 0.0;
  return r;
}

template <typename T>
CrossDomainReport cross_domain_eval(const adapter::SegmentationModel<T>& model, const DiceReport& reference,
                                    const std::vector<data::PreparedVolume>& domain_volumes,
                                    const std::vector<std::string>& class_names) {
  if (domain_volumes.empty()) throw std::invalid_argument("cross_domain_eval: no volumes for the target domain");
  CrossDomainReport r;
  r.domain = data::to_string(domain_volumes.front().domain);
  r.reference = reference;
  r.report = evaluate(model, domain_volumes, class_names).dice;
  r.relative_drop = relative_drop(reference.mean, r.report.mean);
  return r;
}

#define SLICEGATE_INSTANTIATE(T)                                                                                 \
  template EvaluationResult evaluate(const adapter::SegmentationModel<T>&, const std::vector<data::PreparedVolume>&, \
                                     const std::vector<std::string>&, const EvaluateOptions&);                  \
  template std::vector<EvaluationResult> evaluate_prompt_sets(                                                   \
      const adapter::SegmentationModel<T>&, const std::vector<data::PreparedVolume>&,                            \
      const std::vector<std::string>&, const std::vector<std::vector<std::string>>&, std::size_t,                \
      PredictionTrace*);                                                                                         \
  template AblationReport prompt_ablation(const adapter::SegmentationModel<T>&,                                  \
                                          const std::vector<data::PreparedVolume>&,                              \
                                          const std::vector<std::string>&, AblationMode, PredictionTrace*);       \
  template CrossDomainReport cross_domain_eval(const adapter::SegmentationModel<T>&, const DiceReport&,          \
                                               const std::vector<data::PreparedVolume>&,                         \
                                               const std::vector<std::string>&);
SLICEGATE_INSTANTIATE(float)
SLICEGATE_INSTANTIATE(double)
#undef SLICEGATE_INSTANTIATE

}  // namespace slicegate::evaluation
