// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic CT-like volumes with five structure archetypes and single-slice
// distractors that copy the small structure's appearance.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "slicegate/data/volume.hpp"

namespace slicegate::data {

enum class Archetype { blob, pair_left, pair_right, lens, ribbon };

std::string to_string(Archetype a);
Archetype parse_archetype(const std::string& text);

struct ClassSpec {
  std::string name;
  Archetype archetype = Archetype::blob;
  double sampling_weight = 1.0;
  bool lateralized = false;
};

void to_json(nlohmann::json& j, const ClassSpec& c);
void from_json(const nlohmann::json& j, ClassSpec& c);

/// liver (blob), left_kidney / right_kidney (lateralized pair),
/// pancreas (lens, x8), esophagus (ribbon, x8). Label id = position + 1.
std::vector<ClassSpec> default_class_table();

std::vector<std::string> class_names(const std::vector<ClassSpec>& table);

struct GeneratorConfig {
  std::size_t depth = 40;
  std::size_t rows = 64;
  std::size_t cols = 64;
  std::vector<ClassSpec> classes = default_class_table();
  std::size_t min_distractors = 1;
  std::size_t max_distractors = 3;
  double noise_sigma = 12.0;

  void validate() const;
};

/// One distractor: an elliptical patch confined to slice z.
struct Distractor {
  std::size_t z = 0;
  double row = 0.0;
  double col = 0.0;
  double radius_row = 0.0;
  double radius_col = 0.0;
  std::vector<std::size_t> pixels;  // in-plane indices r * W + c
};

struct GenerationTrace {
  std::vector<Distractor> distractors;
  std::size_t lens_first_z = 0;
  std::size_t lens_last_z = 0;
  std::size_t placement_attempts = 0;
};

/// Intensity of the small-structure archetype and of distractors before noise.
inline constexpr double kLensIntensity = 70.0;
inline constexpr double kTissueIntensity = 20.0;
inline constexpr double kAirIntensity = -200.0;
inline constexpr double kMaxIntensity = 400.0;

/// Deterministic in (seed, domain, config). Every distractor is checked to
/// have background-only labels and no other distractor at the same pixels in
/// slices z-1 and z+1.
LabeledVolume generate_volume(std::uint64_t seed, Domain domain, const GeneratorConfig& config,
                              const std::string& volume_id, GenerationTrace* trace = nullptr);

}  // namespace slicegate::data
