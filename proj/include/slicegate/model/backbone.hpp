// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Single-slice, prompt-conditioned segmentation backbone: patch-token encoder,
// prompt embedding table and a FiLM-conditioned transformer decoder.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "slicegate/numerics/layers.hpp"

namespace slicegate::model {

using numerics::Rng;
using numerics::Shape;
using numerics::Tensor;

/// Name reserved for the empty prompt.
inline const std::string kBlankPrompt = "";

class UnknownClassError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct BackboneConfig {
  std::size_t slice_rows = 64;
  std::size_t slice_cols = 64;
  std::size_t patch = 8;
  std::size_t token_width = 96;   // D_v
  std::size_t prompt_width = 96;  // D_p
  std::size_t encoder_depth = 2;
  std::size_t decoder_depth = 2;
  std::size_t heads = 4;
  std::size_t mlp_ratio = 4;
  std::vector<std::string> vocabulary;

  std::size_t grid_rows() const { return slice_rows / patch; }
  std::size_t grid_cols() const { return slice_cols / patch; }
  std::size_t tokens() const { return grid_rows() * grid_cols(); }
  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
};

void to_json(nlohmann::json& j, const BackboneConfig& c);
void from_json(const nlohmann::json& j, BackboneConfig& c);

/// Encoder output for a batch of slices: tokens[B, L, D_v] on a
/// grid_rows x grid_cols patch grid.
template <typename T>
struct TokenGrid {
  Tensor<T> tokens;
  std::size_t grid_rows = 0;
  std::size_t grid_cols = 0;
  std::vector<std::int64_t> slice_index;  // one per batch row, -1 when unknown
};

/// Prompt vectors [B, D_p] and the names they were looked up with.
template <typename T>
struct PromptEmbedding {
  std::vector<std::string> class_names;
  Tensor<T> vector;
};

/// Logits [B, H, W]; probabilities are sigmoid(logits).
template <typename T>
struct MaskLogits {
  Tensor<T> logits;
  std::vector<std::int64_t> slice_index;
  std::vector<std::string> class_names;
};

/// Preprocessed slices [B, H, W] with values in [0, 255] become patch rows
/// [B, L, patch*patch] scaled to [-1, 1]. Pure data transform.
template <typename T>
Tensor<T> patchify(std::span<const float> slices, std::size_t batch, const BackboneConfig& config);

template <typename T>
class Backbone {
 public:
  static Backbone init(const BackboneConfig& config, Rng& rng);

  const BackboneConfig& config() const { return config_; }

  /// slices: B preprocessed H x W images, concatenated row-major.
  TokenGrid<T> encode(std::span<const float> slices, std::size_t batch) const;

  /// Row in the prompt table for a class name; the empty string selects the
  /// reserved BLANK row. Unknown names throw UnknownClassError.
  std::size_t prompt_row(const std::string& class_name) const;
  PromptEmbedding<T> embed_prompt(const std::vector<std::string>& class_names) const;

  MaskLogits<T> decode(const TokenGrid<T>& grid, const PromptEmbedding<T>& prompt) const;

  /// decode(encode(slices), embed_prompt(class_names)).
  MaskLogits<T> forward_single(std::span<const float> slices, const std::vector<std::string>& class_names) const;

  /// Every trainable tensor, named with its module prefix
  /// (encoder., prompt., decoder.).
  void collect(numerics::ParameterList<T>& out) const;

  const Tensor<T>& prompt_table() const { return prompt_table_; }

  /// Closed-form trainable parameter count for a configuration.
  static std::size_t parameter_count(const BackboneConfig& config);

 private:
  BackboneConfig config_;
  numerics::Linear<T> patch_embed_;
  Tensor<T> encoder_pos_;  // [L, D_v]
  std::vector<numerics::TransformerLayer<T>> encoder_layers_;
  numerics::LayerNorm<T> encoder_norm_;
  Tensor<T> prompt_table_;  // [V + 1, D_p]; last row is BLANK
  numerics::Linear<T> film_scale_;
  numerics::Linear<T> film_shift_;
  std::vector<numerics::TransformerLayer<T>> decoder_layers_;
  numerics::LayerNorm<T> decoder_norm_;
  numerics::Linear<T> head_;
};

}  // namespace slicegate::model
