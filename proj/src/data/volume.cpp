// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include "slicegate/data/volume.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "slicegate/numerics/binary_io.hpp"

namespace slicegate::data {

namespace io = numerics::io;

std::string to_string(Domain d) {
  switch (d) {
    case Domain::train: return "train";
    case Domain::shift: return "shift";
    case Domain::modality: return "modality";
  }
  return "unknown";
}

Domain parse_domain(const std::string& text) {
  std::string t = text;
  const std::string suffix = "-domain";
  if (t.size() > suffix.size() && t.compare(t.size() - suffix.size(), suffix.size(), suffix) == 0) {
    t.resize(t.size() - suffix.size());
  }
  if (t == "train") return Domain::train;
  if (t == "shift") return Domain::shift;
  if (t == "modality") return Domain::modality;
  throw std::invalid_argument("unknown domain '" + text + "' (expected train, shift or modality)");
}

void LabeledVolume::validate() const {
  const std::size_t n = depth * rows * cols;
  if (n == 0) throw std::invalid_argument("volume " + volume_id + " is empty");
  if (intensities.size() != n || labels.size() != n) {
    throw std::invalid_argument("volume " + volume_id + " has inconsistent buffer sizes");
  }
  for (float v : intensities) {
    if (!std::isfinite(v)) throw std::invalid_argument("volume " + volume_id + " has non-finite intensities");
  }
  for (auto l : labels) {
    if (l > num_classes) throw std::invalid_argument("volume " + volume_id + " has label beyond num_classes");
  }
}

bool PreparedVolume::slice_has(std::size_t z, std::uint8_t label) const {
  const auto* p = label_slice(z);
  return std::find(p, p + plane(), label) != p + plane();
}

bool PreparedVolume::volume_has(std::uint8_t label) const {
  return std::find(labels.begin(), labels.end(), label) != labels.end();
}

void write_volume(const std::filesystem::path& path, const LabeledVolume& v) {
  v.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open volume for writing: " + path.string());
  os.write("SVOL", 4);
  io::put_le<std::uint32_t>(os, kVolumeVersion);
  io::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(v.depth));
  io::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(v.rows));
  io::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(v.cols));
  io::put_le<std::uint32_t>(os, v.num_classes);
  io::put_le<std::uint64_t>(os, v.seed);
  io::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(v.domain));
  io::put_floats(os, v.intensities);
  os.write(reinterpret_cast<const char*>(v.labels.data()), static_cast<std::streamsize>(v.labels.size()));
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

LabeledVolume read_volume(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw VolumeFormatError("cannot open volume: " + path.string());
  char magic[4];
  if (!is.read(magic, 4)) throw TruncatedVolumeError("truncated volume header: " + path.string());
  if (std::string(magic, 4) != "SVOL") throw BadMagicError("not an SVOL file (bad magic): " + path.string());
  std::uint32_t version = 0;
  if (!io::get_le(is, version)) throw TruncatedVolumeError("truncated volume header: " + path.string());
  if (version != kVolumeVersion) {
    throw VolumeVersionError("SVOL version " + std::to_string(version) + " not supported (reader supports " +
                             std::to_string(kVolumeVersion) + "): " + path.string());
  }
  LabeledVolume v;
  v.volume_id = path.stem().string();
  std::uint32_t z = 0, h = 0, w = 0;
  std::uint8_t domain = 0;
  if (!io::get_le(is, z) || !io::get_le(is, h) || !io::get_le(is, w) || !io::get_le(is, v.num_classes) ||
      !io::get_le(is, v.seed) || !io::get_le(is, domain)) {
    throw TruncatedVolumeError("truncated volume header: " + path.string());
  }
  if (domain > static_cast<std::uint8_t>(Domain::modality)) {
    throw VolumeFormatError("unknown domain tag " + std::to_string(domain) + ": " + path.string());
  }
  v.depth = z;
  v.rows = h;
  v.cols = w;
  v.domain = static_cast<Domain>(domain);
  const std::size_t n = static_cast<std::size_t>(z) * h * w;
  v.intensities.resize(n);
  v.labels.resize(n);
  if (!io::get_floats(is, v.intensities) ||
      !is.read(reinterpret_cast<char*>(v.labels.data()), static_cast<std::streamsize>(n))) {
    throw TruncatedVolumeError("truncated volume data: " + path.string());
  }
  try {
    v.validate();
  } catch (const std::invalid_argument& e) {
    throw VolumeFormatError(e.what());
  }
  return v;
}

}  // namespace slicegate::data
