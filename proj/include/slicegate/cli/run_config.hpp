// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "slicegate/data/manifest.hpp"
#include "slicegate/training/config.hpp"

namespace slicegate::cli {

inline constexpr const char* kSeedEnv = "SLICEGATE_SEED";

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ReportOptions {
  std::size_t tau_area = 10;
  int decimals = 6;
};

/// One file configures every command. `seed` drives both dataset generation
/// and training; the nested sections carry no seed of their own.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "runs";
  data::DatasetConfig data;
  training::TrainConfig train;
  ReportOptions report;

  void validate() const;
  /// The training configuration with the run seed applied.
  training::TrainConfig train_config() const;
  data::DatasetConfig dataset_config() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
/// Missing keys keep defaults; unknown keys and wrong types raise ConfigError.
void from_json(const nlohmann::json& j, RunConfig& c);

/// Reads `path` (or starts from defaults when empty) and applies SLICEGATE_SEED.
RunConfig load_run_config(const std::optional<std::filesystem::path>& path);

/// Parses an unsigned seed, rejecting signs, garbage and overflow.
std::uint64_t parse_seed(const std::string& text, const std::string& source);

}  // namespace slicegate::cli
