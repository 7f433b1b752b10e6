// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dataset layout on disk: one SVOL file per volume plus manifest.json with the
// class table, generator geometry and the split of every file.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "slicegate/data/synthetic.hpp"
#include "slicegate/data/volume.hpp"

namespace slicegate::data {

inline constexpr const char* kManifestName = "manifest.json";

struct ManifestEntry {
  std::string file;  // relative to the manifest directory
  std::string volume_id;
  std::string split;  // train, val or test
  Domain domain = Domain::train;
  std::uint64_t seed = 0;
};

struct DatasetManifest {
  std::vector<ClassSpec> classes;
  std::size_t depth = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry*> select(const std::string& split, Domain domain) const;
};

void to_json(nlohmann::json& j, const DatasetManifest& m);
/// Rejects duplicate volume ids or seeds and unknown splits.
void from_json(const nlohmann::json& j, DatasetManifest& m);

struct DatasetConfig {
  GeneratorConfig generator;
  std::uint64_t seed = 0;
  std::size_t train_volumes = 30;
  std::size_t val_volumes = 10;
  std::size_t test_volumes = 10;
  /// The train domain gets all three splits; any other domain only a test split.
  std::vector<Domain> domains{Domain::train};
};

/// Per-volume seed derived from (dataset seed, domain, split, position).
std::uint64_t volume_seed(std::uint64_t dataset_seed, Domain domain, const std::string& split, std::size_t k);

/// Writes every volume and manifest.json into `dir` and returns the manifest.
DatasetManifest generate_dataset(const std::filesystem::path& dir, const DatasetConfig& config);

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `path` may be the manifest file or its directory. Throws DatasetError
/// naming the path when it is missing or malformed.
DatasetManifest read_manifest(const std::filesystem::path& path);
std::filesystem::path manifest_directory(const std::filesystem::path& path);

/// Reads and preprocesses every volume of one split and domain.
std::vector<PreparedVolume> load_split(const std::filesystem::path& manifest_path, const DatasetManifest& manifest,
                                       const std::string& split, Domain domain);

}  // namespace slicegate::data
