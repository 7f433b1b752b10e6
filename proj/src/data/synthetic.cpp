// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include "slicegate/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

#include "slicegate/numerics/rng.hpp"

namespace slicegate::data {

using numerics::Rng;

std::string to_string(Archetype a) {
  switch (a) {
    case Archetype::blob: return "blob";
    case Archetype::pair_left: return "pair_left";
    case Archetype::pair_right: return "pair_right";
    case Archetype::lens: return "lens";
    case Archetype::ribbon: return "ribbon";
  }
  return "unknown";
}

Archetype parse_archetype(const std::string& text) {
  for (auto a : {Archetype::blob, Archetype::pair_left, Archetype::pair_right, Archetype::lens, Archetype::ribbon}) {
    if (to_string(a) == text) return a;
  }
  throw std::invalid_argument("unknown archetype '" + text + "'");
}

void to_json(nlohmann::json& j, const ClassSpec& c) {
  j = nlohmann::json{{"name", c.name},
                     {"archetype", to_string(c.archetype)},
                     {"sampling_weight", c.sampling_weight},
                     {"lateralized", c.lateralized}};
}

void from_json(const nlohmann::json& j, ClassSpec& c) {
  j.at("name").get_to(c.name);
  c.archetype = parse_archetype(j.at("archetype").get<std::string>());
  j.at("sampling_weight").get_to(c.sampling_weight);
  j.at("lateralized").get_to(c.lateralized);
}

std::vector<ClassSpec> default_class_table() {
  return {
      {"liver", Archetype::blob, 1.0, false},
      {"left_kidney", Archetype::pair_left, 1.0, true},
      {"right_kidney", Archetype::pair_right, 1.0, true},
      {"pancreas", Archetype::lens, 8.0, false},
      {"esophagus", Archetype::ribbon, 8.0, false},
  };
}

std::vector<std::string> class_names(const std::vector<ClassSpec>& table) {
  std::vector<std::string> out;
  for (const auto& c : table) out.push_back(c.name);
  return out;
}

void GeneratorConfig::validate() const {
  if (depth < 10 || rows < 32 || cols < 32) throw std::invalid_argument("generator: volume must be at least 10x32x32");
  if (classes.empty() || classes.size() > 255) throw std::invalid_argument("generator: need 1..255 classes");
  std::set<Archetype> seen;
  for (const auto& c : classes) {
    if (!seen.insert(c.archetype).second) {
      throw std::invalid_argument("generator: archetype " + to_string(c.archetype) + " used twice");
    }
    if (!(c.sampling_weight > 0.0)) throw std::invalid_argument("generator: sampling weights must be positive");
  }
  if (min_distractors < 1 || max_distractors < min_distractors) {
    throw std::invalid_argument("generator: distractor count range invalid");
  }
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("generator: noise_sigma must be non-negative");
}

namespace {

constexpr double kBlobIntensity = 110.0;
constexpr double kPairIntensity = 170.0;
constexpr double kRibbonIntensity = 240.0;
constexpr double kSpineIntensity = 380.0;
constexpr std::size_t kPlacementTries = 400;

struct Ellipse {
  double row, col, radius_row, radius_col;
  bool contains(double r, double c) const {
    const double dr = (r - row) / radius_row;
    const double dc = (c - col) / radius_col;
    return dr * dr + dc * dc <= 1.0;
  }
};

struct Canvas {
  std::size_t depth, rows, cols;
  std::vector<double> base;           // noise-free intensity
  std::vector<std::uint8_t> labels;
  std::vector<std::uint8_t> body;     // in-plane, shared by all slices
  std::vector<std::uint8_t> blocked;  // in-plane structures that are not labelled (spine)
  std::vector<std::uint8_t> distractor;
  std::size_t overlaps = 0;

  std::size_t at(std::size_t z, std::size_t r, std::size_t c) const { return (z * rows + r) * cols + c; }

  std::vector<std::size_t> pixels(const Ellipse& e) const {
    std::vector<std::size_t> out;
    const auto r0 = static_cast<std::ptrdiff_t>(std::floor(e.row - e.radius_row));
    const auto r1 = static_cast<std::ptrdiff_t>(std::ceil(e.row + e.radius_row));
    const auto c0 = static_cast<std::ptrdiff_t>(std::floor(e.col - e.radius_col));
    const auto c1 = static_cast<std::ptrdiff_t>(std::ceil(e.col + e.radius_col));
    for (auto r = std::max<std::ptrdiff_t>(r0, 0); r <= std::min<std::ptrdiff_t>(r1, rows - 1); ++r) {
      for (auto c = std::max<std::ptrdiff_t>(c0, 0); c <= std::min<std::ptrdiff_t>(c1, cols - 1); ++c) {
        if (e.contains(static_cast<double>(r), static_cast<double>(c))) out.push_back(r * cols + c);
      }
    }
    return out;
  }

  void paint(std::size_t z, const std::vector<std::size_t>& px, std::uint8_t label, double value) {
    for (auto p : px) {
      const std::size_t i = z * rows * cols + p;
      if (!body[p] || blocked[p] || labels[i] != 0) {
        ++overlaps;
        continue;
      }
      labels[i] = label;
      base[i] = value;
    }
  }
};

/// Ellipsoid cross-section scale at distance dz from the center slice.
double section_scale(double dz, double half_extent) {
  const double t = dz / half_extent;
  return t >= 1.0 ? 0.0 : std::sqrt(1.0 - t * t);
}

bool try_build(Canvas& cv, const GeneratorConfig& cfg, Rng& rng, GenerationTrace& trace) {
  const double H = static_cast<double>(cfg.rows);
  const double W = static_cast<double>(cfg.cols);
  const double Z = static_cast<double>(cfg.depth);
  const std::size_t plane = cfg.rows * cfg.cols;
  cv.base.assign(cfg.depth * plane, kAirIntensity);
  cv.labels.assign(cfg.depth * plane, 0);
  cv.body.assign(plane, 0);
  cv.blocked.assign(plane, 0);
  cv.distractor.assign(cfg.depth * plane, 0);
  cv.overlaps = 0;

  const Ellipse body{H / 2 + rng.uniform(-1.5, 1.5), W / 2 + rng.uniform(-1.5, 1.5), 0.42 * H + rng.uniform(-1, 1),
                     0.47 * W + rng.uniform(-1, 1)};
  for (auto p : cv.pixels(body)) cv.body[p] = 1;
  const Ellipse spine{0.81 * H, body.col, 0.0625 * H, 0.0625 * H};
  const auto spine_px = cv.pixels(spine);
  for (auto p : spine_px) cv.blocked[p] = 1;
  for (std::size_t z = 0; z < cfg.depth; ++z) {
    for (std::size_t p = 0; p < plane; ++p) {
      if (cv.body[p]) cv.base[z * plane + p] = kTissueIntensity;
    }
    for (auto p : spine_px) {
      if (cv.body[p]) cv.base[z * plane + p] = kSpineIntensity;
    }
  }

  const double lens_value = kLensIntensity + rng.uniform(-4, 4);
  Ellipse lens_region{0.47 * H, 0.56 * W, 0.0, 0.0};
  for (std::size_t k = 0; k < cfg.classes.size(); ++k) {
    const auto label = static_cast<std::uint8_t>(k + 1);
    switch (cfg.classes[k].archetype) {
      case Archetype::blob: {
        const Ellipse e{0.375 * H + rng.uniform(-1.5, 1.5), 0.30 * W + rng.uniform(-1.5, 1.5),
                        0.17 * H * rng.uniform(0.9, 1.1), 0.155 * W * rng.uniform(0.9, 1.1)};
        const double zc = rng.uniform(0.375 * Z, 0.625 * Z);
        const double half = 0.3 * Z + 0.5;
        const double value = kBlobIntensity + rng.uniform(-5, 5);
        for (std::size_t z = 0; z < cfg.depth; ++z) {
          const double s = section_scale(static_cast<double>(z) - zc, half);
          if (s * e.radius_row < 1.0) continue;
          cv.paint(z, cv.pixels({e.row, e.col, e.radius_row * s, e.radius_col * s}), label, value);
        }
        break;
      }
      case Archetype::pair_left:
      case Archetype::pair_right: {
        const bool left = cfg.classes[k].archetype == Archetype::pair_left;
        const Ellipse e{0.656 * H + rng.uniform(-1, 1), (left ? 0.766 : 0.234) * W + rng.uniform(-1, 1),
                        0.094 * H * rng.uniform(0.9, 1.1), 0.07 * W * rng.uniform(0.9, 1.1)};
        const double zc = rng.uniform(0.45 * Z, 0.6 * Z);
        const double half = 0.15 * Z + 0.5;
        const double value = kPairIntensity + rng.uniform(-5, 5);
        for (std::size_t z = 0; z < cfg.depth; ++z) {
          const double s = section_scale(static_cast<double>(z) - zc, half);
          if (s * e.radius_col < 1.0) continue;
          cv.paint(z, cv.pixels({e.row, e.col, e.radius_row * s, e.radius_col * s}), label, value);
        }
        break;
      }
      case Archetype::lens: {
        // Short volumes cap the extent so the start range stays non-empty.
        const auto lo = static_cast<std::int64_t>(0.2 * Z), hi = static_cast<std::int64_t>(0.8 * Z);
        const auto n = static_cast<std::size_t>(rng.between(4, std::min<std::int64_t>(8, hi - lo)));
        const auto first = static_cast<std::size_t>(rng.between(lo, hi - static_cast<std::int64_t>(n)));
        const Ellipse e{lens_region.row + rng.uniform(-2, 2), lens_region.col + rng.uniform(-3, 3),
                        0.055 * H * rng.uniform(0.9, 1.1), 0.07 * W * rng.uniform(0.9, 1.1)};
        const double zc = static_cast<double>(first) + static_cast<double>(n - 1) / 2.0;
        const double half = static_cast<double>(n) / 2.0 + 0.5;
        for (std::size_t z = first; z < first + n; ++z) {
          const double s = section_scale(static_cast<double>(z) - zc, half);
          cv.paint(z, cv.pixels({e.row, e.col, e.radius_row * s, e.radius_col * s}), label, lens_value);
        }
        trace.lens_first_z = first;
        trace.lens_last_z = first + n - 1;
        break;
      }
      case Archetype::ribbon: {
        const auto z0 = static_cast<std::size_t>(0.1 * Z);
        const auto z1 = static_cast<std::size_t>(0.8 * Z);
        const double row = 0.69 * H + rng.uniform(-1, 1);
        const double col = 0.5 * W + rng.uniform(-1, 1);
        const double phase = rng.uniform(0, 2 * std::numbers::pi);
        const double value = kRibbonIntensity + rng.uniform(-5, 5);
        for (std::size_t z = z0; z <= z1 && z < cfg.depth; ++z) {
          const double c = col + 1.5 * std::sin(2 * std::numbers::pi * static_cast<double>(z) / Z + phase);
          cv.paint(z, cv.pixels({row, c, 1.2, 1.2}), label, value);
        }
        break;
      }
    }
  }
  if (cv.overlaps > 0) return false;

  // Distractors: half of them land where the lens structure can live, so
  // position alone does not separate them from it.
  for (std::size_t z = 0; z < cfg.depth; ++z) {
    const auto count = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(cfg.min_distractors),
                                                             static_cast<std::int64_t>(cfg.max_distractors)));
    std::size_t placed = 0;
    for (std::size_t attempt = 0; attempt < kPlacementTries && placed < count; ++attempt) {
      ++trace.placement_attempts;
      Ellipse e{};
      if (rng.bernoulli(0.5)) {
        e.row = lens_region.row + rng.uniform(-4, 4);
        e.col = lens_region.col + rng.uniform(-6, 6);
      } else {
        e.row = rng.uniform(body.row - body.radius_row, body.row + body.radius_row);
        e.col = rng.uniform(body.col - body.radius_col, body.col + body.radius_col);
      }
      const double s = rng.uniform(0.63, 1.1);
      e.radius_row = 0.055 * H * s;
      e.radius_col = 0.07 * W * s;
      auto px = cv.pixels(e);
      if (px.empty()) continue;
      bool ok = true;
      for (auto p : px) {
        if (!cv.body[p] || cv.blocked[p]) {
          ok = false;
          break;
        }
        for (std::size_t zz = (z == 0 ? 0 : z - 1); zz <= std::min(z + 1, cfg.depth - 1) && ok; ++zz) {
          const std::size_t i = zz * plane + p;
          if (cv.labels[i] != 0 || cv.distractor[i] != 0) ok = false;
        }
        if (!ok) break;
      }
      if (!ok) continue;
      for (auto p : px) {
        cv.base[z * plane + p] = lens_value;
        cv.distractor[z * plane + p] = 1;
      }
      trace.distractors.push_back({z, e.row, e.col, e.radius_row, e.radius_col, std::move(px)});
      ++placed;
    }
    if (placed < count) return false;
  }
  return true;
}

void assert_distractor_guarantee(const Canvas& cv, const GenerationTrace& trace) {
  const std::size_t plane = cv.rows * cv.cols;
  for (const auto& d : trace.distractors) {
    for (auto p : d.pixels) {
      if (cv.labels[d.z * plane + p] != 0) throw std::logic_error("distractor overlaps a labelled structure");
      for (std::size_t zz : {d.z - 1, d.z + 1}) {
        if (d.z == 0 && zz == d.z - 1) continue;
        if (zz >= cv.depth) continue;
        const std::size_t i = zz * plane + p;
        if (cv.labels[i] != 0 || cv.distractor[i] != 0 || cv.base[i] != kTissueIntensity) {
          throw std::logic_error("distractor at z=" + std::to_string(d.z) + " has non-background support at z=" +
                                 std::to_string(zz));
        }
      }
    }
  }
}

}  // namespace

LabeledVolume generate_volume(std::uint64_t seed, Domain domain, const GeneratorConfig& config,
                              const std::string& volume_id, GenerationTrace* trace_out) {
  config.validate();
  Rng root(seed);
  Canvas cv{config.depth, config.rows, config.cols, {}, {}, {}, {}, {}, 0};
  GenerationTrace trace;
  bool built = false;
  for (std::uint64_t attempt = 0; attempt < 64 && !built; ++attempt) {
    Rng geometry = root.fork(attempt);
    trace = GenerationTrace{};
    built = try_build(cv, config, geometry, trace);
  }
  if (!built) throw std::runtime_error("generator could not place all structures for volume " + volume_id);
  assert_distractor_guarantee(cv, trace);

  LabeledVolume v;
  v.volume_id = volume_id;
  v.seed = seed;
  v.domain = domain;
  v.depth = config.depth;
  v.rows = config.rows;
  v.cols = config.cols;
  v.num_classes = static_cast<std::uint32_t>(config.classes.size());
  v.labels = cv.labels;
  v.intensities.resize(cv.base.size());
  Rng noise = root.fork(1000);
  const double sigma = config.noise_sigma * (domain == Domain::train ? 1.0 : 1.6);
  for (std::size_t i = 0; i < cv.base.size(); ++i) {
    double b = cv.base[i];
    if (domain != Domain::train && b != kAirIntensity) b = 35.0 + 0.85 * (b - kTissueIntensity);
    if (domain == Domain::modality) b = 200.0 - b;
    const double x = std::clamp(b + noise.normal(0.0, sigma), kAirIntensity, kMaxIntensity);
    v.intensities[i] = static_cast<float>(x);
  }
  if (trace_out) *trace_out = std::move(trace);
  return v;
}

}  // namespace slicegate::data
