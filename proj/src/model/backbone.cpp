// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include "slicegate/model/backbone.hpp"

#include <algorithm>

namespace slicegate::model {

using numerics::LayerNorm;
using numerics::Linear;
using numerics::ShapeError;
using numerics::TransformerLayer;

void BackboneConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("backbone config: " + msg); };
  if (patch == 0) fail("patch must be positive");
  if (slice_rows == 0 || slice_cols == 0) fail("slice size must be positive");
  if (slice_rows % patch != 0 || slice_cols % patch != 0) {
    fail("slice " + std::to_string(slice_rows) + "x" + std::to_string(slice_cols) + " not divisible by patch " +
         std::to_string(patch));
  }
  if (heads == 0 || token_width % heads != 0) fail("token_width must be divisible by heads");
  if (prompt_width == 0) fail("prompt_width must be positive");
  if (mlp_ratio == 0) fail("mlp_ratio must be positive");
  if (vocabulary.empty()) fail("vocabulary is empty");
  for (std::size_t i = 0; i < vocabulary.size(); ++i) {
    if (vocabulary[i].empty()) fail("class names must be non-empty; the empty name is reserved");
    for (std::size_t j = 0; j < i; ++j) {
      if (vocabulary[i] == vocabulary[j]) fail("duplicate class name '" + vocabulary[i] + "'");
    }
  }
}

void to_json(nlohmann::json& j, const BackboneConfig& c) {
  j = nlohmann::json{{"slice_rows", c.slice_rows},       {"slice_cols", c.slice_cols},
                     {"patch", c.patch},                 {"token_width", c.token_width},
                     {"prompt_width", c.prompt_width},   {"encoder_depth", c.encoder_depth},
                     {"decoder_depth", c.decoder_depth}, {"heads", c.heads},
                     {"mlp_ratio", c.mlp_ratio},         {"vocabulary", c.vocabulary}};
}

void from_json(const nlohmann::json& j, BackboneConfig& c) {
  j.at("slice_rows").get_to(c.slice_rows);
  j.at("slice_cols").get_to(c.slice_cols);
  j.at("patch").get_to(c.patch);
  j.at("token_width").get_to(c.token_width);
  j.at("prompt_width").get_to(c.prompt_width);
  j.at("encoder_depth").get_to(c.encoder_depth);
  j.at("decoder_depth").get_to(c.decoder_depth);
  j.at("heads").get_to(c.heads);
  j.at("mlp_ratio").get_to(c.mlp_ratio);
  j.at("vocabulary").get_to(c.vocabulary);
}

template <typename T>
Tensor<T> patchify(std::span<const float> slices, std::size_t batch, const BackboneConfig& config) {
  const std::size_t h = config.slice_rows;
  const std::size_t w = config.slice_cols;
  const std::size_t p = config.patch;
  if (slices.size() != batch * h * w) {
    throw ShapeError("patchify: expected " + std::to_string(batch) + " slices of " + std::to_string(h) + "x" +
                     std::to_string(w) + ", got " + std::to_string(slices.size()) + " values");
  }
  const std::size_t gr = h / p;
  const std::size_t gc = w / p;
  std::vector<T> out(slices.size());
  std::size_t o = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    const float* img = slices.data() + b * h * w;
    for (std::size_t r = 0; r < gr; ++r) {
      for (std::size_t c = 0; c < gc; ++c) {
        for (std::size_t pr = 0; pr < p; ++pr) {
          for (std::size_t pc = 0; pc < p; ++pc) {
            out[o++] = static_cast<T>(img[(r * p + pr) * w + c * p + pc]) / T(127.5) - T(1);
          }
        }
      }
    }
  }
  numerics::require_finite(std::span<const T>(out), "patchify");
  return Tensor<T>({batch, gr * gc, p * p}, std::move(out));
}

template <typename T>
Backbone<T> Backbone<T>::init(const BackboneConfig& config, Rng& rng) {
  config.validate();
  Backbone b;
  b.config_ = config;
  const std::size_t dv = config.token_width;
  const std::size_t dp = config.prompt_width;
  const std::size_t pp = config.patch * config.patch;
  b.patch_embed_ = Linear<T>::init(pp, dv, true, rng);
  b.encoder_pos_ = numerics::normal_parameter<T>({config.tokens(), dv}, 0.02, rng);
  for (std::size_t i = 0; i < config.encoder_depth; ++i) {
    b.encoder_layers_.push_back(TransformerLayer<T>::init(dv, config.heads, config.mlp_ratio, 0.0, rng));
  }
  b.encoder_norm_ = LayerNorm<T>::init(dv);
  b.prompt_table_ = numerics::normal_parameter<T>({config.vocabulary.size() + 1, dp}, 1.0, rng);
  b.film_scale_ = Linear<T>::init(dp, dv, true, rng);
  b.film_shift_ = Linear<T>::init(dp, dv, true, rng);
  for (std::size_t i = 0; i < config.decoder_depth; ++i) {
    b.decoder_layers_.push_back(TransformerLayer<T>::init(dv, config.heads, config.mlp_ratio, 0.0, rng));
  }
  b.decoder_norm_ = LayerNorm<T>::init(dv);
  b.head_ = Linear<T>::init(dv, pp, true, rng);
  return b;
}

template <typename T>
TokenGrid<T> Backbone<T>::encode(std::span<const float> slices, std::size_t batch) const {
  auto x = patch_embed_(patchify<T>(slices, batch, config_));
  x = numerics::add_broadcast(x, encoder_pos_);
  for (const auto& layer : encoder_layers_) x = layer.forward(x, false, nullptr);
  TokenGrid<T> grid;
  grid.tokens = encoder_norm_(x);
  grid.grid_rows = config_.grid_rows();
  grid.grid_cols = config_.grid_cols();
  grid.slice_index.assign(batch, -1);
  return grid;
}

template <typename T>
std::size_t Backbone<T>::prompt_row(const std::string& class_name) const {
  if (class_name == kBlankPrompt) return config_.vocabulary.size();
  auto it = std::find(config_.vocabulary.begin(), config_.vocabulary.end(), class_name);
  if (it == config_.vocabulary.end()) throw UnknownClassError("unknown class name '" + class_name + "'");
  return static_cast<std::size_t>(it - config_.vocabulary.begin());
}

template <typename T>
PromptEmbedding<T> Backbone<T>::embed_prompt(const std::vector<std::string>& class_names) const {
  std::vector<std::size_t> rows;
  rows.reserve(class_names.size());
  for (const auto& name : class_names) rows.push_back(prompt_row(name));
  return PromptEmbedding<T>{class_names, numerics::gather_rows<T>(prompt_table_, rows)};
}

template <typename T>
MaskLogits<T> Backbone<T>::decode(const TokenGrid<T>& grid, const PromptEmbedding<T>& prompt) const {
  const auto& tokens = grid.tokens;
  if (tokens.rank() != 3 || tokens.dim(2) != config_.token_width || tokens.dim(1) != config_.tokens()) {
    throw ShapeError("decode: tokens must be [B, " + std::to_string(config_.tokens()) + ", " +
                     std::to_string(config_.token_width) + "], got " + numerics::shape_string(tokens.shape()));
  }
  const std::size_t batch = tokens.dim(0);
  if (prompt.vector.rank() != 2 || prompt.vector.dim(0) != batch || prompt.vector.dim(1) != config_.prompt_width) {
    throw ShapeError("decode: prompt must be [" + std::to_string(batch) + ", " +
                     std::to_string(config_.prompt_width) + "], got " +
                     numerics::shape_string(prompt.vector.shape()));
  }
  auto x = numerics::film(tokens, film_scale_(prompt.vector), film_shift_(prompt.vector));
  for (const auto& layer : decoder_layers_) x = layer.forward(x, false, nullptr);
  auto patches = head_(decoder_norm_(x));
  MaskLogits<T> out;
  out.logits = numerics::unpatchify(patches, grid.grid_rows, grid.grid_cols, config_.patch);
  out.slice_index = grid.slice_index;
  out.class_names = prompt.class_names;
  return out;
}

template <typename T>
MaskLogits<T> Backbone<T>::forward_single(std::span<const float> slices,
                                          const std::vector<std::string>& class_names) const {
  return decode(encode(slices, class_names.size()), embed_prompt(class_names));
}

template <typename T>
void Backbone<T>::collect(numerics::ParameterList<T>& out) const {
  patch_embed_.collect("encoder.patch_embed", out);
  out.push_back({"encoder.pos_embed", encoder_pos_});
  for (std::size_t i = 0; i < encoder_layers_.size(); ++i) {
    encoder_layers_[i].collect("encoder.layers." + std::to_string(i), out);
  }
  encoder_norm_.collect("encoder.norm", out);
  out.push_back({"prompt.table", prompt_table_});
  film_scale_.collect("decoder.film_scale", out);
  film_shift_.collect("decoder.film_shift", out);
  for (std::size_t i = 0; i < decoder_layers_.size(); ++i) {
    decoder_layers_[i].collect("decoder.layers." + std::to_string(i), out);
  }
  decoder_norm_.collect("decoder.norm", out);
  head_.collect("decoder.head", out);
}

template <typename T>
std::size_t Backbone<T>::parameter_count(const BackboneConfig& c) {
  const std::size_t dv = c.token_width;
  const std::size_t dp = c.prompt_width;
  const std::size_t pp = c.patch * c.patch;
  const std::size_t layer = TransformerLayer<T>::parameter_count(dv, c.mlp_ratio);
  return (pp * dv + dv) + c.tokens() * dv + c.encoder_depth * layer + 2 * dv + (c.vocabulary.size() + 1) * dp +
         2 * (dp * dv + dv) + c.decoder_depth * layer + 2 * dv + (dv * pp + pp);
}

template Tensor<float> patchify<float>(std::span<const float>, std::size_t, const BackboneConfig&);
template Tensor<double> patchify<double>(std::span<const float>, std::size_t, const BackboneConfig&);
template class Backbone<float>;
template class Backbone<double>;

}  // namespace slicegate::model
