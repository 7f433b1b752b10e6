// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include "slicegate/model/checkpoint.hpp"

#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "slicegate/numerics/binary_io.hpp"

namespace slicegate::model {

namespace io = numerics::io;

namespace {
constexpr char kMagic[4] = {'S', 'G', 'C', 'K'};

bool has_prefix(const std::string& s, const std::string& prefix) {
  return !prefix.empty() && s.compare(0, prefix.size(), prefix) == 0;
}
}  // namespace

const CheckpointTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json manifest;
  manifest["model_kind"] = ckpt.model_kind;
  manifest["config"] = ckpt.config;
  manifest["metadata"] = ckpt.metadata;
  manifest["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& t : ckpt.tensors) {
    if (numerics::shape_numel(t.shape) != t.data.size()) {
      throw CheckpointError("checkpoint tensor '" + t.name + "' has inconsistent shape");
    }
    manifest["tensors"].push_back({{"name", t.name}, {"shape", t.shape}, {"offset", offset}, {"count", t.data.size()}});
    offset += 4 * t.data.size();
  }
  const std::string text = manifest.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("cannot open checkpoint for writing: " + path.string());
  os.write(kMagic, 4);
  io::put_le<std::uint32_t>(os, kCheckpointVersion);
  io::put_le<std::uint64_t>(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& t : ckpt.tensors) io::put_floats(os, t.data);
  if (!os) throw CheckpointError("write failed: " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint: " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::string(magic, 4) != std::string(kMagic, 4)) {
    throw CheckpointError("not a checkpoint file (bad magic): " + path.string());
  }
  std::uint32_t version = 0;
  std::uint64_t length = 0;
  if (!io::get_le(is, version) || !io::get_le(is, length)) throw CheckpointError("truncated checkpoint header");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  std::string text(length, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(length))) throw CheckpointError("truncated checkpoint manifest");

  Checkpoint ckpt;
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text);
    ckpt.model_kind = manifest.at("model_kind").get<std::string>();
    ckpt.config = manifest.at("config");
    ckpt.metadata = manifest.value("metadata", nlohmann::json::object());
    std::uint64_t expected = 0;
    for (const auto& entry : manifest.at("tensors")) {
      CheckpointTensor t;
      t.name = entry.at("name").get<std::string>();
      t.shape = entry.at("shape").get<numerics::Shape>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const auto count = entry.at("count").get<std::size_t>();
      if (offset != expected || count != numerics::shape_numel(t.shape)) {
        throw CheckpointError("checkpoint manifest entry '" + t.name + "' is inconsistent");
      }
      expected += 4 * count;
      t.data.resize(count);
      ckpt.tensors.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint manifest: ") + e.what());
  }
  for (auto& t : ckpt.tensors) {
    if (!io::get_floats(is, t.data)) throw CheckpointError("truncated checkpoint data at '" + t.name + "'");
  }
  return ckpt;
}

template <typename T>
std::vector<CheckpointTensor> export_parameters(const numerics::ParameterList<T>& params) {
  std::vector<CheckpointTensor> out;
  out.reserve(params.size());
  for (const auto& p : params) {
    CheckpointTensor t{p.name, p.tensor.shape(), {}};
    auto v = p.tensor.values();
    t.data.assign(v.begin(), v.end());
    out.push_back(std::move(t));
  }
  return out;
}

template <typename T>
LoadSummary load_parameters(const Checkpoint& ckpt, const numerics::ParameterList<T>& params,
                            const std::string& optional_prefix) {
  std::unordered_map<std::string, const CheckpointTensor*> by_name;
  for (const auto& t : ckpt.tensors) by_name.emplace(t.name, &t);
  std::unordered_set<std::string> wanted;
  LoadSummary summary;
  for (const auto& p : params) {
    wanted.insert(p.name);
    auto it = by_name.find(p.name);
    if (it == by_name.end()) {
      if (!has_prefix(p.name, optional_prefix)) throw CheckpointError("checkpoint lacks tensor '" + p.name + "'");
      summary.left_at_init.push_back(p.name);
      continue;
    }
    const auto& src = *it->second;
    if (src.shape != p.tensor.shape()) {
      throw CheckpointError("shape mismatch for '" + p.name + "': file " + numerics::shape_string(src.shape) +
                            ", model " + numerics::shape_string(p.tensor.shape()));
    }
    auto dst = numerics::Tensor<T>(p.tensor).mutable_values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(src.data[i]);
    summary.loaded.push_back(p.name);
  }
  for (const auto& t : ckpt.tensors) {
    if (wanted.count(t.name)) continue;
    if (!has_prefix(t.name, optional_prefix)) throw CheckpointError("unexpected tensor '" + t.name + "' in checkpoint");
    summary.ignored.push_back(t.name);
  }
  return summary;
}

template std::vector<CheckpointTensor> export_parameters(const numerics::ParameterList<float>&);
template std::vector<CheckpointTensor> export_parameters(const numerics::ParameterList<double>&);
template LoadSummary load_parameters(const Checkpoint&, const numerics::ParameterList<float>&, const std::string&);
template LoadSummary load_parameters(const Checkpoint&, const numerics::ParameterList<double>&, const std::string&);

}  // namespace slicegate::model
