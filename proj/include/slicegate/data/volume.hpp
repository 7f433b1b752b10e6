// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Labeled volumes and the SVOL file format:
//   "SVOL" | u32 version=1 | u32 Z, H, W, num_classes | u64 seed | u8 domain
//   | Z*H*W float32 LE intensities | Z*H*W u8 labels

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace slicegate::data {

inline constexpr std::uint32_t kVolumeVersion = 1;

enum class Domain : std::uint8_t { train = 0, shift = 1, modality = 2 };

std::string to_string(Domain d);
/// Accepts "train", "shift", "modality" (and the "-domain" suffixed forms).
Domain parse_domain(const std::string& text);

struct LabeledVolume {
  std::string volume_id;
  std::uint64_t seed = 0;
  Domain domain = Domain::train;
  std::size_t depth = 0;  // Z
  std::size_t rows = 0;   // H
  std::size_t cols = 0;   // W
  std::uint32_t num_classes = 0;
  std::vector<float> intensities;    // Z*H*W, synthetic HU or MR-like units
  std::vector<std::uint8_t> labels;  // Z*H*W, 0 = background

  std::size_t plane() const { return rows * cols; }
  /// Throws std::invalid_argument when sizes or label ids are inconsistent.
  void validate() const;
};

/// A volume after intensity normalisation: image values in [0, 255].
struct PreparedVolume {
  std::string volume_id;
  Domain domain = Domain::train;
  std::size_t depth = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> image;
  std::vector<std::uint8_t> labels;

  std::size_t plane() const { return rows * cols; }
  const float* slice(std::size_t z) const { return image.data() + z * plane(); }
  const std::uint8_t* label_slice(std::size_t z) const { return labels.data() + z * plane(); }
  /// True if slice z contains any voxel of `label`.
  bool slice_has(std::size_t z, std::uint8_t label) const;
  bool volume_has(std::uint8_t label) const;
};

class VolumeFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class BadMagicError : public VolumeFormatError {
 public:
  using VolumeFormatError::VolumeFormatError;
};
class TruncatedVolumeError : public VolumeFormatError {
 public:
  using VolumeFormatError::VolumeFormatError;
};
class VolumeVersionError : public VolumeFormatError {
 public:
  using VolumeFormatError::VolumeFormatError;
};

void write_volume(const std::filesystem::path& path, const LabeledVolume& volume);
/// The volume id is taken from the file stem.
LabeledVolume read_volume(const std::filesystem::path& path);

}  // namespace slicegate::data
