// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include "slicegate/adapter/segmentation_model.hpp"

#include <stdexcept>

namespace slicegate::adapter {

using numerics::ShapeError;

std::string to_string(ModelKind kind) { return kind == ModelKind::baseline ? "baseline" : "temporal"; }

ModelKind parse_model_kind(const std::string& text) {
  if (text == "baseline") return ModelKind::baseline;
  if (text == "temporal") return ModelKind::temporal;
  throw std::invalid_argument("unknown model kind '" + text + "' (expected baseline or temporal)");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"kind", to_string(c.kind)}, {"backbone", c.backbone}, {"adapter", c.adapter}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  c.kind = parse_model_kind(j.at("kind").get<std::string>());
  j.at("backbone").get_to(c.backbone);
  j.at("adapter").get_to(c.adapter);
}

std::vector<float> center_slices(std::span<const float> stacks, std::size_t batch, std::size_t rows,
                                 std::size_t cols) {
  const std::size_t plane = rows * cols;
  if (stacks.size() != batch * kWindow * plane) {
    throw ShapeError("expected " + std::to_string(batch) + " stacks of 5 x " + std::to_string(rows) + " x " +
                     std::to_string(cols) + ", got " + std::to_string(stacks.size()) + " values");
  }
  std::vector<float> out(batch * plane);
  for (std::size_t b = 0; b < batch; ++b) {
    std::copy_n(stacks.data() + (b * kWindow + kCenter) * plane, plane, out.data() + b * plane);
  }
  return out;
}

template <typename T>
SegmentationModel<T> SegmentationModel<T>::init(const ModelConfig& config, std::uint64_t seed) {
  SegmentationModel m;
  m.config_ = config;
  Rng root(seed);
  Rng backbone_rng = root.fork(1);
  Rng adapter_rng = root.fork(2);
  m.backbone_ = model::Backbone<T>::init(config.backbone, backbone_rng);
  if (config.kind == ModelKind::temporal) {
    m.adapter_ = TemporalAdapter<T>::init(config.adapter, config.backbone.token_width, adapter_rng);
  }
  return m;
}

template <typename T>
const TemporalAdapter<T>& SegmentationModel<T>::temporal_adapter() const {
  if (!adapter_) throw std::logic_error("baseline model has no temporal adapter");
  return *adapter_;
}

template <typename T>
ModelOutput<T> SegmentationModel<T>::forward(std::span<const float> stacks,
                                             const std::vector<std::string>& class_names, bool training,
                                             Rng* rng) const {
  if (config_.kind == ModelKind::baseline) return forward_single(stacks, class_names);
  return forward_temporal(stacks, class_names, training, rng);
}

template <typename T>
ModelOutput<T> SegmentationModel<T>::forward_temporal(std::span<const float> stacks,
                                                      const std::vector<std::string>& class_names, bool training,
                                                      Rng* rng) const {
  const auto& adapter = temporal_adapter();
  const auto& bc = config_.backbone;
  const std::size_t batch = class_names.size();
  if (stacks.size() != batch * kWindow * bc.slice_rows * bc.slice_cols) {
    throw ShapeError("forward_temporal: stack data does not match " + std::to_string(batch) + " windows");
  }
  auto prompt = backbone_.embed_prompt(class_names);
  auto grid = backbone_.encode(stacks, batch * kWindow);
  WindowTokens<T> window;
  window.tokens = numerics::reshape(grid.tokens, {batch, kWindow, bc.tokens(), bc.token_width});
  auto fused = adapter.forward(window, training, rng, forced_gate_);
  model::TokenGrid<T> center{fused.h_center, grid.grid_rows, grid.grid_cols, std::vector<std::int64_t>(batch, -1)};
  return ModelOutput<T>{backbone_.decode(center, prompt), std::move(fused.diag)};
}

template <typename T>
ModelOutput<T> SegmentationModel<T>::forward_single(std::span<const float> stacks,
                                                    const std::vector<std::string>& class_names) const {
  const auto& bc = config_.backbone;
  auto centers = center_slices(stacks, class_names.size(), bc.slice_rows, bc.slice_cols);
  return ModelOutput<T>{backbone_.forward_single(centers, class_names), std::nullopt};
}

template <typename T>
numerics::ParameterList<T> SegmentationModel<T>::parameters() const {
  numerics::ParameterList<T> out;
  backbone_.collect(out);
  if (adapter_) adapter_->collect(out);
  return out;
}

template class SegmentationModel<float>;
template class SegmentationModel<double>;

template <typename T>
void save_model(const std::filesystem::path& path, const SegmentationModel<T>& model, const nlohmann::json& metadata) {
  model::Checkpoint ckpt;
  ckpt.model_kind = to_string(model.kind());
  ckpt.config = model.config();
  ckpt.metadata = metadata.is_null() ? nlohmann::json::object() : metadata;
  ckpt.tensors = model::export_parameters(model.parameters());
  model::write_checkpoint(path, ckpt);
}

template <typename T>
SegmentationModel<T> load_model(const std::filesystem::path& path, std::optional<ModelKind> as_kind,
                                model::LoadSummary* summary) {
  auto ckpt = model::read_checkpoint(path);
  ModelConfig config;
  try {
    config = ckpt.config.get<ModelConfig>();
  } catch (const std::exception& e) {
    throw model::CheckpointError("checkpoint configuration unreadable: " + std::string(e.what()));
  }
  if (as_kind) config.kind = *as_kind;
  const auto seed = ckpt.metadata.value("init_seed", std::uint64_t{0});
  auto m = SegmentationModel<T>::init(config, seed);
  auto loaded = model::load_parameters(ckpt, m.parameters(), "adapter.");
  if (summary) *summary = std::move(loaded);
  return m;
}

template void save_model(const std::filesystem::path&, const SegmentationModel<float>&, const nlohmann::json&);
template void save_model(const std::filesystem::path&, const SegmentationModel<double>&, const nlohmann::json&);
template SegmentationModel<float> load_model(const std::filesystem::path&, std::optional<ModelKind>, model::LoadSummary*);
template SegmentationModel<double> load_model(const std::filesystem::path&, std::optional<ModelKind>,
                                              model::LoadSummary*);

}  // namespace slicegate::adapter
