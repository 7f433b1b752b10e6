// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Weight checkpoints: "SGCK" magic, u32 version, u64 manifest length, a JSON
// manifest, then the float32 little-endian tensor blob. See docs/FORMATS.md.

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "slicegate/numerics/layers.hpp"

namespace slicegate::model {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointTensor {
  std::string name;
  numerics::Shape shape;
  std::vector<float> data;
};

struct Checkpoint {
  std::string model_kind;
  nlohmann::json config;  // free-form model configuration
  nlohmann::json metadata;
  std::vector<CheckpointTensor> tensors;

  const CheckpointTensor* find(const std::string& name) const;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

template <typename T>
std::vector<CheckpointTensor> export_parameters(const numerics::ParameterList<T>& params);

struct LoadSummary {
  std::vector<std::string> loaded;
  std::vector<std::string> left_at_init;  // parameters absent from the file
  std::vector<std::string> ignored;       // file tensors with no parameter
};

/// Copies checkpoint tensors into matching parameters by name. Parameters
/// missing from the file, and file tensors with no matching parameter, are
/// tolerated only under `optional_prefix` (e.g. "adapter."); anything else,
/// and any shape mismatch, throws CheckpointError.
template <typename T>
LoadSummary load_parameters(const Checkpoint& ckpt, const numerics::ParameterList<T>& params,
                            const std::string& optional_prefix);

}  // namespace slicegate::model
