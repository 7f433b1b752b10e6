// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "doctest.h"
#include "slicegate/data/context.hpp"
#include "slicegate/data/manifest.hpp"
#include "slicegate/data/preprocess.hpp"
#include "slicegate/data/sampling.hpp"
#include "slicegate/data/synthetic.hpp"
#include "slicegate/data/volume.hpp"

using namespace slicegate::data;
using slicegate::numerics::Rng;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("slicegate_test_data_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::size_t label_of(const std::string& name) {
  const auto names = class_names(default_class_table());
  return static_cast<std::size_t>(std::find(names.begin(), names.end(), name) - names.begin()) + 1;
}

std::vector<std::size_t> slices_with(const LabeledVolume& v, std::size_t label) {
  std::vector<std::size_t> out;
  for (std::size_t z = 0; z < v.depth; ++z) {
    const auto* p = v.labels.data() + z * v.plane();
    if (std::find(p, p + v.plane(), label) != p + v.plane()) out.push_back(z);
  }
  return out;
}

// Hand-built volume: slice z holds label 1 for z < positives.
PreparedVolume toy_volume(const std::string& id, std::size_t depth, std::size_t positives) {
  PreparedVolume v;
  v.volume_id = id;
  v.depth = depth;
  v.rows = 8;
  v.cols = 8;
  v.image.assign(depth * 64, 0.0f);
  v.labels.assign(depth * 64, 0);
  for (std::size_t z = 0; z < positives; ++z) v.labels[z * 64 + 27] = 1;
  for (std::size_t i = 0; i < v.image.size(); ++i) v.image[i] = static_cast<float>(i % 255);
  return v;
}

}  // namespace

TEST_CASE("generation is deterministic and stays in the synthetic HU range") {
  const GeneratorConfig cfg;
  const auto a = generate_volume(11, Domain::train, cfg, "a");
  const auto b = generate_volume(11, Domain::train, cfg, "a");
  const auto c = generate_volume(12, Domain::train, cfg, "a");
  CHECK(a.intensities == b.intensities);
  CHECK(a.labels == b.labels);
  CHECK(a.intensities != c.intensities);
  CHECK(a.depth == 40);
  CHECK(a.rows == 64);
  CHECK(a.cols == 64);
  CHECK(a.num_classes == 5);
  for (float x : a.intensities) {
    REQUIRE(std::isfinite(x));
    REQUIRE(x >= -200.0f);
    REQUIRE(x <= 400.0f);
  }
  // Both clamp sides of the CT window are exercised.
  CHECK(*std::min_element(a.intensities.begin(), a.intensities.end()) < -125.0f);
  CHECK(*std::max_element(a.intensities.begin(), a.intensities.end()) > 275.0f);
}

TEST_CASE("archetype geometry") {
  const GeneratorConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    GenerationTrace trace;
    const auto v = generate_volume(seed, Domain::train, cfg, "v", &trace);
    REQUIRE_NOTHROW(v.validate());

    const auto lens = slices_with(v, label_of("pancreas"));
    REQUIRE(lens.size() >= 4);
    REQUIRE(lens.size() <= 8);
    CHECK(lens.back() - lens.front() + 1 == lens.size());
    CHECK(lens.front() == trace.lens_first_z);
    CHECK(lens.back() == trace.lens_last_z);

    const auto blob = slices_with(v, label_of("liver"));
    const double blob_share = static_cast<double>(blob.size()) / 40.0;
    CHECK(blob_share >= 0.5);
    CHECK(blob_share <= 0.7);

    const auto ribbon_label = label_of("esophagus");
    const auto ribbon = slices_with(v, ribbon_label);
    CHECK(ribbon.size() >= 28);
    for (auto z : ribbon) {
      std::size_t r0 = 64, r1 = 0, c0 = 64, c1 = 0;
      for (std::size_t i = 0; i < v.plane(); ++i) {
        if (v.labels[z * v.plane() + i] != ribbon_label) continue;
        r0 = std::min(r0, i / 64), r1 = std::max(r1, i / 64);
        c0 = std::min(c0, i % 64), c1 = std::max(c1, i % 64);
      }
      CHECK(r1 - r0 + 1 <= 3);
      CHECK(c1 - c0 + 1 <= 3);
    }

    // The pair sits on opposite sides of the midline, left class on the high-column side.
    auto mean_col = [&](std::size_t label) {
      double s = 0, n = 0;
      for (std::size_t i = 0; i < v.labels.size(); ++i) {
        if (v.labels[i] == label) s += static_cast<double>(i % 64), n += 1;
      }
      REQUIRE(n > 0);
      return s / n;
    };
    CHECK(mean_col(label_of("left_kidney")) > 40.0);
    CHECK(mean_col(label_of("right_kidney")) < 24.0);
  }
}

TEST_CASE("distractors are single-slice, unlabeled and surrounded by background in z") {
  GeneratorConfig cfg;
  cfg.noise_sigma = 0.0;
  std::size_t inside_lens_region = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GenerationTrace trace;
    const auto v = generate_volume(seed, Domain::train, cfg, "v", &trace);
    std::map<std::size_t, std::size_t> per_slice;
    for (const auto& d : trace.distractors) {
      ++per_slice[d.z];
      ++total;
      if (std::abs(d.row - 30.08) <= 4.0 && std::abs(d.col - 35.84) <= 6.0) ++inside_lens_region;
      REQUIRE(!d.pixels.empty());
      for (auto p : d.pixels) {
        CHECK(v.labels[d.z * v.plane() + p] == 0);
        CHECK(v.intensities[d.z * v.plane() + p] == doctest::Approx(kLensIntensity).epsilon(0.1));
        for (int dz : {-1, 1}) {
          const auto zz = static_cast<std::ptrdiff_t>(d.z) + dz;
          if (zz < 0 || zz >= 40) continue;
          const auto i = static_cast<std::size_t>(zz) * v.plane() + p;
          CHECK(v.labels[i] == 0);
          CHECK(v.intensities[i] == static_cast<float>(kTissueIntensity));
        }
      }
    }
    CHECK(per_slice.size() == 40);
    for (const auto& [z, n] : per_slice) {
      CHECK(n >= 1);
      CHECK(n <= 3);
    }
  }
  // Roughly half of them are placed where the small structure can appear.
  const double share = static_cast<double>(inside_lens_region) / static_cast<double>(total);
  CHECK(share > 0.3);
  CHECK(share < 0.7);
}

TEST_CASE("distractor neighbours keep background statistics under noise") {
  const GeneratorConfig cfg;
  GenerationTrace trace;
  const auto v = generate_volume(3, Domain::train, cfg, "v", &trace);
  double s = 0, s2 = 0, n = 0;
  for (const auto& d : trace.distractors) {
    for (auto p : d.pixels) {
      for (int dz : {-1, 1}) {
        const auto zz = static_cast<std::ptrdiff_t>(d.z) + dz;
        if (zz < 0 || zz >= 40) continue;
        const double x = v.intensities[static_cast<std::size_t>(zz) * v.plane() + p];
        s += x, s2 += x * x, n += 1;
      }
    }
  }
  const double mean = s / n, sd = std::sqrt(s2 / n - mean * mean);
  CHECK(mean == doctest::Approx(kTissueIntensity).epsilon(0.15));
  CHECK(sd == doctest::Approx(12.0).epsilon(0.1));
}

TEST_CASE("domains share geometry and differ in appearance") {
  const GeneratorConfig cfg;
  const auto t = generate_volume(5, Domain::train, cfg, "v");
  const auto s = generate_volume(5, Domain::shift, cfg, "v");
  const auto m = generate_volume(5, Domain::modality, cfg, "v");
  CHECK(t.labels == s.labels);
  CHECK(t.labels == m.labels);
  auto organ_mean = [](const LabeledVolume& v, std::uint8_t label) {
    double a = 0, n = 0;
    for (std::size_t i = 0; i < v.labels.size(); ++i) {
      if (v.labels[i] == label) a += v.intensities[i], n += 1;
    }
    return a / n;
  };
  const auto liver = static_cast<std::uint8_t>(label_of("liver"));
  const auto kidney = static_cast<std::uint8_t>(label_of("left_kidney"));
  const double contrast_t = organ_mean(t, kidney) - organ_mean(t, liver);
  const double contrast_s = organ_mean(s, kidney) - organ_mean(s, liver);
  CHECK(contrast_s == doctest::Approx(0.85 * contrast_t).epsilon(0.05));
  // Noise scale: spread of liver voxels around the organ mean.
  auto organ_sd = [&](const LabeledVolume& v, std::uint8_t label) {
    const double mu = organ_mean(v, label);
    double a = 0, n = 0;
    for (std::size_t i = 0; i < v.labels.size(); ++i) {
      if (v.labels[i] == label) a += (v.intensities[i] - mu) * (v.intensities[i] - mu), n += 1;
    }
    return std::sqrt(a / n);
  };
  CHECK(organ_sd(t, liver) == doctest::Approx(12.0).epsilon(0.1));
  CHECK(organ_sd(s, liver) == doctest::Approx(12.0 * 1.6).epsilon(0.1));
  // Contrast inverted: the kidney is brighter than the liver in CT, darker in the modality domain.
  CHECK(organ_mean(t, kidney) > organ_mean(t, liver));
  CHECK(organ_mean(m, kidney) < organ_mean(m, liver));
}

TEST_CASE("generator config validation") {
  GeneratorConfig cfg;
  cfg.classes.push_back(cfg.classes.front());
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  GeneratorConfig small;
  small.max_distractors = 0;
  CHECK_THROWS_AS(small.validate(), std::invalid_argument);
  auto table = default_class_table();
  CHECK(table[3].sampling_weight == 8.0);
  CHECK(table[0].sampling_weight == 1.0);
  CHECK(table[1].lateralized);
  CHECK(table[2].lateralized);
  CHECK_FALSE(table[3].lateralized);
  const nlohmann::json j = table;
  CHECK(j.get<std::vector<ClassSpec>>()[4].archetype == Archetype::ribbon);
}

TEST_CASE("preprocess_ct window") {
  const std::vector<float> raw{-125.0f, 275.0f, 75.0f, -500.0f, 1000.0f};
  const auto out = preprocess_ct(raw);
  CHECK(out[0] == 0.0f);
  CHECK(out[1] == 255.0f);
  CHECK(out[2] == 127.5f);
  CHECK(out[3] == 0.0f);
  CHECK(out[4] == 255.0f);
  Rng rng(4);
  std::vector<float> wide(5000);
  for (auto& x : wide) x = static_cast<float>(rng.uniform(-2000, 2000));
  auto once = preprocess_ct(wide);
  auto twice = preprocess_ct(once);
  for (std::size_t i = 0; i < wide.size(); ++i) {
    REQUIRE(once[i] >= 0.0f);
    REQUIRE(once[i] <= 255.0f);
    REQUIRE(twice[i] >= 0.0f);
    REQUIRE(twice[i] <= 255.0f);
  }
}

TEST_CASE("preprocess_mr percentile window") {
  std::vector<float> ramp(1001);
  std::iota(ramp.begin(), ramp.end(), 0.0f);
  CHECK(percentile(ramp, 1.0) == 10.0);
  CHECK(percentile(ramp, 99.0) == 990.0);
  std::vector<float> shuffled = ramp;
  Rng rng(9);
  for (std::size_t i = shuffled.size() - 1; i > 0; --i) std::swap(shuffled[i], shuffled[rng.below(i + 1)]);
  const auto out = preprocess_mr(shuffled);
  for (std::size_t i = 0; i < shuffled.size(); ++i) {
    const float x = shuffled[i];
    if (x <= 10.0f) CHECK(out[i] == 0.0f);
    if (x >= 990.0f) CHECK(out[i] == 255.0f);
    if (x == 500.0f) CHECK(out[i] == doctest::Approx(127.5));
  }
  // Ordering preserved inside the window.
  const auto sorted_out = preprocess_mr(ramp);
  for (std::size_t i = 11; i < 990; ++i) REQUIRE(sorted_out[i] > sorted_out[i - 1]);

  // Percentile oracle: full sort with the linear rule.
  std::vector<float> sample(777);
  for (auto& x : sample) x = static_cast<float>(rng.normal(3.0, 2.0));
  std::vector<float> sorted = sample;
  std::sort(sorted.begin(), sorted.end());
  for (double p : {0.0, 1.0, 37.5, 99.0, 100.0}) {
    const double pos = p / 100.0 * 776.0;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min<std::size_t>(lo + 1, 776);
    const double expected = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    CHECK(percentile(sample, p) == doctest::Approx(expected).epsilon(1e-12));
  }

  std::string warning;
  const std::vector<float> constant(100, 42.0f);
  const auto zeros = preprocess_mr(constant, &warning);
  CHECK(std::all_of(zeros.begin(), zeros.end(), [](float x) { return x == 0.0f; }));
  CHECK(warning.find("degenerate") != std::string::npos);
}

TEST_CASE("prepare_volume picks the window by domain") {
  const GeneratorConfig cfg;
  const auto ct = prepare_volume(generate_volume(1, Domain::train, cfg, "ct"));
  const auto mr = prepare_volume(generate_volume(1, Domain::modality, cfg, "mr"));
  for (const auto* p : {&ct, &mr}) {
    CHECK(*std::min_element(p->image.begin(), p->image.end()) >= 0.0f);
    CHECK(*std::max_element(p->image.begin(), p->image.end()) <= 255.0f);
  }
  CHECK(*std::max_element(mr.image.begin(), mr.image.end()) == 255.0f);
  CHECK(*std::min_element(mr.image.begin(), mr.image.end()) == 0.0f);
}

TEST_CASE("context indices replicate the edges") {
  std::size_t rep = 9;
  using A = std::array<std::size_t, 5>;
  CHECK(context_indices(0, 40, &rep) == A{0, 0, 0, 1, 2});
  CHECK(rep == 2);
  CHECK(context_indices(5, 40, &rep) == A{3, 4, 5, 6, 7});
  CHECK(rep == 0);
  CHECK(context_indices(39, 40, &rep) == A{37, 38, 39, 39, 39});
  CHECK(rep == 2);
  CHECK(context_indices(1, 40, &rep) == A{0, 0, 1, 2, 3});
  CHECK(rep == 1);
  for (std::size_t depth = 3; depth < 12; ++depth) {
    for (std::size_t z = 0; z < depth; ++z) {
      context_indices(z, depth, &rep);
      CHECK(rep <= 2);
    }
  }
  // Below three slices more than two positions have to be clamped.
  CHECK(context_indices(0, 1, &rep) == A{0, 0, 0, 0, 0});
  CHECK(rep == 4);
  CHECK_THROWS_AS(context_indices(40, 40), std::out_of_range);
}

TEST_CASE("extract_context_stack") {
  const auto v = toy_volume("toy", 6, 3);
  for (std::size_t z = 0; z < 6; ++z) {
    const auto s = extract_context_stack(v, z, "c", 1);
    CHECK(s.slices.size() == 5 * 64);
    CHECK(s.is_negative == (z >= 3));
    const bool empty = std::all_of(s.target_mask.begin(), s.target_mask.end(), [](auto m) { return m == 0; });
    CHECK(s.is_negative == empty);
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(std::equal(v.slice(s.slice_indices[k]), v.slice(s.slice_indices[k]) + 64, s.slices.begin() + k * 64));
    }
  }
  CHECK_THROWS(extract_context_stack(v, 6, "c", 1));
}

TEST_CASE("augmentation: flip rule, shared parameters, identity") {
  ContextStack s;
  s.rows = 16;
  s.cols = 16;
  s.slices.assign(5 * 256, 0.0f);
  s.target_mask.assign(256, 0);
  for (std::size_t k = 0; k < 5; ++k) {
    for (std::size_t i = 0; i < 256; ++i) s.slices[k * 256 + i] = static_cast<float>((i * 7 + k * 31) % 97);
  }
  for (std::size_t r = 5; r < 9; ++r) {
    for (std::size_t c = 2; c < 7; ++c) s.target_mask[r * 16 + c] = 1;
  }
  s.is_negative = false;

  Rng rng(1);
  std::size_t flips = 0, coins = 0;
  for (int i = 0; i < 1000; ++i) {
    AugmentParams p;
    augment_stack(s, true, rng, &p);
    flips += p.flip;
    CHECK(std::abs(p.angle_degrees) <= 5.0);
  }
  CHECK(flips == 0);
  for (int i = 0; i < 1000; ++i) {
    AugmentParams p;
    augment_stack(s, false, rng, &p);
    coins += p.flip;
  }
  CHECK(coins > 430);
  CHECK(coins < 570);

  // Marker pattern: every slice transformed alone matches its slice in the stack.
  Rng a(77), b(77);
  AugmentParams p;
  const auto out = augment_stack(s, false, a, &p);
  REQUIRE_FALSE(p.fell_back);
  for (std::size_t k = 0; k < 5; ++k) {
    ContextStack single = s;
    for (std::size_t j = 0; j < 5; ++j) std::copy_n(s.slices.begin() + k * 256, 256, single.slices.begin() + j * 256);
    const auto t = apply_transform(single, p.angle_degrees, p.flip);
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(std::equal(t.slices.begin() + j * 256, t.slices.begin() + (j + 1) * 256, out.slices.begin() + k * 256));
    }
    CHECK(t.target_mask == out.target_mask);
  }
  (void)b;

  const auto id = apply_transform(s, 0.0, false);
  CHECK(id.slices == s.slices);
  CHECK(id.target_mask == s.target_mask);
  const auto mirrored = apply_transform(s, 0.0, true);
  for (std::size_t r = 0; r < 16; ++r) {
    for (std::size_t c = 0; c < 16; ++c) {
      CHECK(mirrored.target_mask[r * 16 + c] == s.target_mask[r * 16 + 15 - c]);
      CHECK(mirrored.slices[2 * 256 + r * 16 + c] == s.slices[2 * 256 + r * 16 + 15 - c]);
    }
  }
  for (auto m : out.target_mask) CHECK((m == 0 || m == 1));
}

TEST_CASE("augmentation never changes is_negative") {
  ContextStack neg;
  neg.rows = neg.cols = 16;
  neg.slices.assign(5 * 256, 3.0f);
  neg.target_mask.assign(256, 0);
  neg.is_negative = true;
  ContextStack corner = neg;
  corner.target_mask[0] = 1;  // a single corner pixel rotates out of view
  corner.is_negative = false;
  Rng rng(2);
  std::size_t fallbacks = 0;
  for (int i = 0; i < 200; ++i) {
    CHECK(augment_stack(neg, false, rng).is_negative);
    AugmentParams p;
    const auto t = augment_stack(corner, false, rng, &p);
    CHECK_FALSE(t.is_negative);
    fallbacks += p.fell_back;
  }
  CHECK(fallbacks > 0);
}

TEST_CASE("sample index construction") {
  std::vector<ClassSpec> classes{{"c", Archetype::lens, 8.0, false}};
  std::vector<PreparedVolume> vols{toy_volume("a", 40, 30)};
  const auto index = build_sample_index(vols, classes, 5);
  CHECK(index.positives(0) == 30);
  CHECK(index.negatives(0) == 10);
  std::set<std::size_t> neg_z;
  for (const auto& e : index.entries) {
    CHECK(e.sampling_weight == 8.0);
    if (e.is_negative) {
      neg_z.insert(e.z);
      CHECK(e.z >= 30);
      const auto s = extract_context_stack(vols[0], e.z, e.class_name, 1);
      CHECK(s.is_negative);
    }
  }
  CHECK(neg_z.size() == 10);
  const auto again = build_sample_index(vols, classes, 5);
  for (std::size_t i = 0; i < index.entries.size(); ++i) CHECK(index.entries[i].z == again.entries[i].z);

  std::vector<PreparedVolume> seven{toy_volume("a", 20, 7)};
  CHECK(build_sample_index(seven, classes, 1).negatives(0) == 3);

  std::vector<ClassSpec> missing{{"c", Archetype::blob, 1.0, false}, {"d", Archetype::ribbon, 8.0, false}};
  CHECK_THROWS_AS(build_sample_index(vols, missing, 1), std::invalid_argument);
}

TEST_CASE("sample index on generated volumes uses the class weights") {
  const GeneratorConfig cfg;
  std::vector<PreparedVolume> vols;
  for (std::uint64_t s = 0; s < 3; ++s) vols.push_back(prepare_volume(generate_volume(s, Domain::train, cfg, "v")));
  const auto index = build_sample_index(vols, cfg.classes, 1);
  for (const auto& e : index.entries) {
    CHECK(e.sampling_weight == cfg.classes[e.class_index].sampling_weight);
    CHECK(e.is_negative != vols[e.volume].slice_has(e.z, static_cast<std::uint8_t>(e.class_index + 1)));
  }
  for (std::size_t k = 0; k < cfg.classes.size(); ++k) {
    CHECK(index.negatives(k) == (index.positives(k) + 2) / 3);
  }
}

TEST_CASE("weighted sampler frequencies") {
  SampleIndex uniform;
  for (std::size_t i = 0; i < 10; ++i) uniform.entries.push_back({0, "v", i, 0, "c", false, 2.0});
  WeightedSampler us(uniform);
  Rng rng(123);
  std::vector<std::size_t> counts(10, 0);
  const std::size_t n = 100000;
  for (std::size_t i = 0; i < n; ++i) ++counts[us.draw(rng)];
  const double p = 0.1, sigma = std::sqrt(n * p * (1 - p));
  for (auto c : counts) CHECK(std::abs(static_cast<double>(c) - n * p) < 3 * sigma);

  SampleIndex two;
  two.entries.push_back({0, "v", 0, 0, "c", false, 8.0});
  two.entries.push_back({0, "v", 1, 0, "c", false, 1.0});
  WeightedSampler ts(two);
  std::size_t hi = 0;
  for (std::size_t i = 0; i < n; ++i) hi += ts.draw(rng) == 0;
  const double ratio = static_cast<double>(hi) / static_cast<double>(n - hi);
  CHECK(std::abs(ratio / 8.0 - 1.0) < 0.05);

  CHECK_THROWS_AS(WeightedSampler(SampleIndex{}), std::invalid_argument);
}

TEST_CASE("sample_batch: determinism and negative fraction") {
  const GeneratorConfig cfg;
  std::vector<PreparedVolume> vols;
  for (std::uint64_t s = 0; s < 2; ++s) vols.push_back(prepare_volume(generate_volume(s, Domain::train, cfg, "v")));
  const auto index = build_sample_index(vols, cfg.classes, 3);
  const WeightedSampler sampler(index);
  Rng a(5), b(5);
  const auto ba = sample_batch(index, sampler, vols, cfg.classes, 8, a);
  const auto bb = sample_batch(index, sampler, vols, cfg.classes, 8, b);
  CHECK(ba.entries == bb.entries);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(ba.stacks[i].slices == bb.stacks[i].slices);
    CHECK(ba.stacks[i].is_negative == index.entries[ba.entries[i]].is_negative);
    CHECK(ba.stacks[i].slices.size() == 5 * 64 * 64);
  }
  CHECK_THROWS(sample_batch(index, sampler, vols, cfg.classes, 0, a));

  Rng r(8);
  std::size_t neg = 0;
  const std::size_t n = 200000;
  for (std::size_t i = 0; i < n; ++i) neg += index.entries[sampler.draw(r)].is_negative;
  CHECK(std::abs(static_cast<double>(neg) / n - index.weighted_negative_fraction()) < 0.01);
  CHECK(index.weighted_negative_fraction() == doctest::Approx(0.25).epsilon(0.04));
}

TEST_CASE("SVOL round trip and errors") {
  const auto dir = scratch_dir("svol");
  const GeneratorConfig cfg;
  const auto v = generate_volume(2, Domain::shift, cfg, "vol");
  write_volume(dir / "vol.svol", v);
  const auto r = read_volume(dir / "vol.svol");
  CHECK(r.volume_id == "vol");
  CHECK(r.seed == 2);
  CHECK(r.domain == Domain::shift);
  CHECK(r.intensities == v.intensities);
  CHECK(r.labels == v.labels);

  std::ifstream in(dir / "vol.svol", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream os(dir / name, std::ios::binary);
    os << content;
    return dir / name;
  };
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(read_volume(write("bad.svol", bad)), BadMagicError);
  CHECK_THROWS_AS(read_volume(write("short.svol", bytes.substr(0, bytes.size() - 10))), TruncatedVolumeError);
  CHECK_THROWS_AS(read_volume(write("head.svol", bytes.substr(0, 10))), TruncatedVolumeError);
  std::string v2 = bytes;
  v2[4] = 2;
  CHECK_THROWS_AS(read_volume(write("v2.svol", v2)), VolumeVersionError);
  CHECK_THROWS_AS(read_volume(dir / "absent.svol"), VolumeFormatError);
}

TEST_CASE("dataset generation and manifest") {
  const auto dir = scratch_dir("manifest");
  DatasetConfig cfg;
  cfg.seed = 17;
  cfg.train_volumes = 2;
  cfg.val_volumes = 1;
  cfg.test_volumes = 1;
  cfg.domains = {Domain::train, Domain::modality};
  const auto m = generate_dataset(dir, cfg);
  CHECK(m.entries.size() == 5);
  const auto back = read_manifest(dir);
  CHECK(back.entries.size() == 5);
  CHECK(back.classes.size() == 5);
  std::set<std::uint64_t> seeds;
  for (const auto& e : back.entries) seeds.insert(e.seed);
  CHECK(seeds.size() == 5);
  const auto train = load_split(dir / kManifestName, back, "train", Domain::train);
  CHECK(train.size() == 2);
  CHECK(train[0].volume_id == "train_train_000");
  CHECK_THROWS_AS(load_split(dir, back, "train", Domain::modality), DatasetError);
  CHECK(load_split(dir, back, "test", Domain::modality).size() == 1);
  CHECK_THROWS_AS(load_split(dir, back, "test", Domain::shift), DatasetError);

  const auto again_dir = scratch_dir("manifest_again");
  generate_dataset(again_dir, cfg);
  for (const auto& e : m.entries) {
    CHECK(read_volume(dir / e.file).intensities == read_volume(again_dir / e.file).intensities);
  }

  try {
    read_manifest(dir / "nowhere" / "manifest.json");
    FAIL("expected DatasetError");
  } catch (const DatasetError& e) {
    CHECK(std::string(e.what()).find("nowhere") != std::string::npos);
  }
}
