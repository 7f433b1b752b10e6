// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include "slicegate/evaluation/predict.hpp"

#include <algorithm>

#include "slicegate/data/context.hpp"
#include "slicegate/numerics/ops.hpp"

namespace slicegate::evaluation {

using adapter::kWindow;

template <typename T>
VolumePredictor<T>::VolumePredictor(const adapter::SegmentationModel<T>& model, const data::PreparedVolume& volume)
    : model_(&model), volume_(&volume) {
  const auto& bc = model.config().backbone;
  if (volume.rows != bc.slice_rows || volume.cols != bc.slice_cols) {
    throw std::invalid_argument("volume " + volume.volume_id + " slice size does not match the model");
  }
  numerics::NoGradGuard no_grad;
  const auto grid = model.backbone().encode(volume.image, volume.depth);
  if (model.kind() == adapter::ModelKind::baseline) {
    center_tokens_ = grid.tokens;
    return;
  }
  // Window tokens gathered from the per-slice encodings, as forward_temporal
  // would produce them from the replicated stacks.
  const std::size_t per_slice = bc.tokens() * bc.token_width;
  const auto tokens = grid.tokens.values();
  std::vector<T> window(volume.depth * kWindow * per_slice);
  for (std::size_t z = 0; z < volume.depth; ++z) {
    const auto idx = data::context_indices(z, volume.depth);
    for (std::size_t k = 0; k < kWindow; ++k) {
      std::copy_n(tokens.begin() + static_cast<std::ptrdiff_t>(idx[k] * per_slice), per_slice,
                  window.begin() + static_cast<std::ptrdiff_t>((z * kWindow + k) * per_slice));
    }
  }
  adapter::WindowTokens<T> w;
  w.tokens = numerics::Tensor<T>({volume.depth, kWindow, bc.tokens(), bc.token_width}, std::move(window));
  auto fused = model.temporal_adapter().forward(w, false, nullptr, model.forced_gate());
  center_tokens_ = fused.h_center;
  const auto g = fused.diag.g.values();
  token_gate_.assign(g.begin(), g.end());
  slice_gate_.assign(volume.depth, 0.0);
  const std::size_t L = bc.tokens();
  for (std::size_t z = 0; z < volume.depth; ++z) {
    double s = 0.0;
    for (std::size_t l = 0; l < L; ++l) s += token_gate_[z * L + l];
    slice_gate_[z] = s / static_cast<double>(L);
  }
}

template <typename T>
std::vector<T> VolumePredictor<T>::logits(const std::string& prompt) const {
  numerics::NoGradGuard no_grad;
  const auto& bb = model_->backbone();
  const auto& bc = model_->config().backbone;
  const auto embedded = bb.embed_prompt(std::vector<std::string>(volume_->depth, prompt));
  model::TokenGrid<T> grid{center_tokens_, bc.grid_rows(), bc.grid_cols(),
                           std::vector<std::int64_t>(volume_->depth, -1)};
  return std::move(bb.decode(grid, embedded).logits).values();
}

template <typename T>
std::vector<std::uint8_t> VolumePredictor<T>::predict(const std::string& prompt, const std::string& target_class,
                                                      PredictionTrace* trace) const {
  const auto z = logits(prompt);
  // sigmoid(x) > 0.5 exactly when x > 0.
  std::vector<std::uint8_t> mask(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) mask[i] = z[i] > T(0) ? 1 : 0;
  if (trace) {
    trace->records.push_back({volume_->volume_id, target_class, prompt,
                              model_->kind() == adapter::ModelKind::baseline ? "single-slice" : "temporal",
                              volume_->depth, model_->forced_gate()});
  }
  return mask;
}

template <typename T>
std::vector<std::uint8_t> predict_volume(const adapter::SegmentationModel<T>& model,
                                         const data::PreparedVolume& volume, const std::string& class_name) {
  return VolumePredictor<T>(model, volume).predict(class_name, class_name);
}

template class VolumePredictor<float>;
template class VolumePredictor<double>;
template std::vector<std::uint8_t> predict_volume(const adapter::SegmentationModel<float>&,
                                                  const data::PreparedVolume&, const std::string&);
template std::vector<std::uint8_t> predict_volume(const adapter::SegmentationModel<double>&,
                                                  const data::PreparedVolume&, const std::string&);

}  // namespace slicegate::evaluation
