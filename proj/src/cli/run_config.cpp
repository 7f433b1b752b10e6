// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include "slicegate/cli/run_config.hpp"

#include <cstdlib>
#include <fstream>

namespace slicegate::cli {

namespace {

nlohmann::json data_json(const data::DatasetConfig& d) {
  nlohmann::json domains = nlohmann::json::array();
  for (auto dom : d.domains) domains.push_back(data::to_string(dom));
  return {{"depth", d.generator.depth},
          {"rows", d.generator.rows},
          {"cols", d.generator.cols},
          {"classes", d.generator.classes},
          {"min_distractors", d.generator.min_distractors},
          {"max_distractors", d.generator.max_distractors},
          {"noise_sigma", d.generator.noise_sigma},
          {"train_volumes", d.train_volumes},
          {"val_volumes", d.val_volumes},
          {"test_volumes", d.test_volumes},
          {"domains", domains}};
}

void merge_into(nlohmann::json& base, const nlohmann::json& overlay) {
  for (const auto& [key, value] : overlay.items()) {
    if (value.is_object() && base.contains(key) && base[key].is_object()) {
      merge_into(base[key], value);
    } else {
      base[key] = value;
    }
  }
}

}  // namespace

std::uint64_t parse_seed(const std::string& text, const std::string& source) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError(source + ": seed must be a non-negative integer, got '" + text + "'");
  }
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (errno == ERANGE || *end != '\0') throw ConfigError(source + ": seed out of range: '" + text + "'");
  return v;
}

void RunConfig::validate() const {
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  if (report.decimals < 1 || report.decimals > 12) throw ConfigError("report.decimals must lie in [1, 12]");
  try {
    data.generator.validate();
    train_config().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (data.train_volumes == 0 || data.val_volumes == 0 || data.test_volumes == 0) {
    throw ConfigError("data: every split needs at least one volume");
  }
  if (data.domains.empty()) throw ConfigError("data.domains must not be empty");
}

training::TrainConfig RunConfig::train_config() const {
  auto t = train;
  t.seed = seed;
  return t;
}

data::DatasetConfig RunConfig::dataset_config() const {
  auto d = data;
  d.seed = seed;
  return d;
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  nlohmann::json train = c.train;
  train.erase("seed");
  j = {{"seed", c.seed},
       {"output_dir", c.output_dir},
       {"data", data_json(c.data)},
       {"train", train},
       {"report", {{"tau_area", c.report.tau_area}, {"decimals", c.report.decimals}}}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  try {
    const nlohmann::json defaults = RunConfig{};
    training::reject_unknown_keys(j, defaults, "");
    nlohmann::json merged = defaults;
    merge_into(merged, j);
    RunConfig out;
    merged.at("seed").get_to(out.seed);
    merged.at("output_dir").get_to(out.output_dir);
    const auto& d = merged.at("data");
    merged.at("data").at("depth").get_to(out.data.generator.depth);
    d.at("rows").get_to(out.data.generator.rows);
    d.at("cols").get_to(out.data.generator.cols);
    out.data.generator.classes = d.at("classes").get<std::vector<data::ClassSpec>>();
    d.at("min_distractors").get_to(out.data.generator.min_distractors);
    d.at("max_distractors").get_to(out.data.generator.max_distractors);
    d.at("noise_sigma").get_to(out.data.generator.noise_sigma);
    d.at("train_volumes").get_to(out.data.train_volumes);
    d.at("val_volumes").get_to(out.data.val_volumes);
    d.at("test_volumes").get_to(out.data.test_volumes);
    out.data.domains.clear();
    for (const auto& dom : d.at("domains")) out.data.domains.push_back(data::parse_domain(dom.get<std::string>()));
    out.train = j.contains("train") ? j.at("train").get<training::TrainConfig>() : training::TrainConfig{};
    merged.at("report").at("tau_area").get_to(out.report.tau_area);
    merged.at("report").at("decimals").get_to(out.report.decimals);
    out.train.seed = out.seed;
    c = std::move(out);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& path) {
  RunConfig c;
  if (path) {
    std::ifstream is(*path);
    if (!is) throw ConfigError("cannot read config file " + path->string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("config file " + path->string() + " is not valid JSON: " + e.what());
    }
    c = j.get<RunConfig>();
  }
  if (const char* env = std::getenv(kSeedEnv); env != nullptr) {
    c.seed = parse_seed(env, kSeedEnv);
    c.train.seed = c.seed;
  }
  return c;
}

}  // namespace slicegate::cli
