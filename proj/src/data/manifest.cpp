// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include "slicegate/data/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "slicegate/data/preprocess.hpp"

namespace slicegate::data {

namespace {

const std::set<std::string> kSplits{"train", "val", "test"};

std::uint64_t mix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::vector<const ManifestEntry*> DatasetManifest::select(const std::string& split, Domain domain) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries) {
    if (e.split == split && e.domain == domain) out.push_back(&e);
  }
  return out;
}

void to_json(nlohmann::json& j, const DatasetManifest& m) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : m.entries) {
    entries.push_back({{"file", e.file},
                       {"volume_id", e.volume_id},
                       {"split", e.split},
                       {"domain", to_string(e.domain)},
                       {"seed", e.seed}});
  }
  j = nlohmann::json{{"format", "slicegate-dataset"},
                     {"version", 1},
                     {"classes", m.classes},
                     {"depth", m.depth},
                     {"rows", m.rows},
                     {"cols", m.cols},
                     {"seed", m.seed},
                     {"volumes", entries}};
}

void from_json(const nlohmann::json& j, DatasetManifest& m) {
  if (j.value("format", "") != "slicegate-dataset") throw std::invalid_argument("not a slicegate dataset manifest");
  if (j.at("version").get<int>() != 1) throw std::invalid_argument("unsupported dataset manifest version");
  m.classes = j.at("classes").get<std::vector<ClassSpec>>();
  j.at("depth").get_to(m.depth);
  j.at("rows").get_to(m.rows);
  j.at("cols").get_to(m.cols);
  j.at("seed").get_to(m.seed);
  m.entries.clear();
  std::set<std::string> ids;
  std::set<std::uint64_t> seeds;
  for (const auto& v : j.at("volumes")) {
    ManifestEntry e;
    v.at("file").get_to(e.file);
    v.at("volume_id").get_to(e.volume_id);
    v.at("split").get_to(e.split);
    e.domain = parse_domain(v.at("domain").get<std::string>());
    v.at("seed").get_to(e.seed);
    if (!kSplits.count(e.split)) throw std::invalid_argument("unknown split '" + e.split + "'");
    if (!ids.insert(e.volume_id).second) throw std::invalid_argument("duplicate volume id " + e.volume_id);
    if (!seeds.insert(e.seed).second) throw std::invalid_argument("duplicate volume seed in " + e.volume_id);
    m.entries.push_back(std::move(e));
  }
}

std::uint64_t volume_seed(std::uint64_t dataset_seed, Domain domain, const std::string& split, std::size_t k) {
  std::uint64_t split_tag = split == "train" ? 1 : split == "val" ? 2 : 3;
  return mix(mix(mix(dataset_seed) ^ (static_cast<std::uint64_t>(domain) + 1) * 0x100000001B3ull) ^
             (split_tag << 40) ^ k);
}

DatasetManifest generate_dataset(const std::filesystem::path& dir, const DatasetConfig& config) {
  config.generator.validate();
  if (std::find(config.domains.begin(), config.domains.end(), Domain::train) == config.domains.end()) {
    throw std::invalid_argument("dataset needs the train domain");
  }
  std::filesystem::create_directories(dir);
  DatasetManifest m;
  m.classes = config.generator.classes;
  m.depth = config.generator.depth;
  m.rows = config.generator.rows;
  m.cols = config.generator.cols;
  m.seed = config.seed;
  std::set<std::uint64_t> seeds;
  const std::vector<std::pair<std::string, std::size_t>> splits{
      {"train", config.train_volumes}, {"val", config.val_volumes}, {"test", config.test_volumes}};
  for (Domain d : config.domains) {
    for (const auto& [split, count] : splits) {
      // Shifted domains serve zero-shot evaluation only.
      if (d != Domain::train && split != "test") continue;
      for (std::size_t k = 0; k < count; ++k) {
        ManifestEntry e;
        e.split = split;
        e.domain = d;
        e.seed = volume_seed(config.seed, d, split, k);
        char id[64];
        std::snprintf(id, sizeof id, "%s_%s_%03zu", to_string(d).c_str(), split.c_str(), k);
        e.volume_id = id;
        e.file = e.volume_id + ".svol";
        if (!seeds.insert(e.seed).second) throw std::logic_error("volume seed collision for " + e.volume_id);
        write_volume(dir / e.file, generate_volume(e.seed, d, config.generator, e.volume_id));
        m.entries.push_back(std::move(e));
      }
    }
  }
  std::ofstream os(dir / kManifestName, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write manifest in " + dir.string());
  os << nlohmann::json(m).dump(2) << '\n';
  return m;
}

std::filesystem::path manifest_directory(const std::filesystem::path& path) {
  return std::filesystem::is_directory(path) ? path : path.parent_path();
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  const auto file = std::filesystem::is_directory(path) ? path / kManifestName : path;
  std::ifstream is(file);
  if (!is) throw DatasetError("dataset manifest not found: " + file.string());
  try {
    return nlohmann::json::parse(is).get<DatasetManifest>();
  } catch (const std::exception& e) {
    throw DatasetError("malformed dataset manifest " + file.string() + ": " + e.what());
  }
}

std::vector<PreparedVolume> load_split(const std::filesystem::path& manifest_path, const DatasetManifest& manifest,
                                       const std::string& split, Domain domain) {
  const auto dir = manifest_directory(manifest_path);
  std::vector<PreparedVolume> out;
  for (const auto* e : manifest.select(split, domain)) {
    LabeledVolume v;
    try {
      v = read_volume(dir / e->file);
    } catch (const VolumeFormatError& err) {
      throw DatasetError(err.what());
    }
    if (v.num_classes != manifest.classes.size()) {
      throw DatasetError("volume " + e->file + " has " + std::to_string(v.num_classes) + " classes, manifest has " +
                         std::to_string(manifest.classes.size()));
    }
    v.volume_id = e->volume_id;
    out.push_back(prepare_volume(v));
  }
  if (out.empty()) {
    throw DatasetError("no " + split + " volumes for domain " + to_string(domain) + " in " + manifest_path.string());
  }
  return out;
}

}  // namespace slicegate::data
