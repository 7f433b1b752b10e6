// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include "slicegate/evaluation/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace slicegate::evaluation {

std::string format_number(double value, int decimals) {
  if (!std::isfinite(value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

std::string format_optional(const std::optional<double>& value, int decimals) {
  return value ? format_number(*value, decimals) : "n/a";
}

std::string pairs_csv(const DiceReport& report) {
  std::string out = "volume_id,class,dice,included\n";
  for (const auto& p : report.pairs) {
    out += p.volume_id + "," + p.class_name + "," + format_number(p.dice) + "," + (p.gt_present ? "1" : "0") + "\n";
  }
  return out;
}

namespace {

// Round through the fixed-precision text so JSON reports are stable.
nlohmann::json number(double v) { return std::stod(format_number(v)); }
nlohmann::json number(const std::optional<double>& v) { return v ? number(*v) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json to_json(const DiceReport& report) {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& c : report.per_class) per_class[c.class_name] = {{"mean", number(c.mean)}, {"volumes", c.volumes}};
  return {{"model_kind", report.model_kind},
          {"domain", report.domain},
          {"mean", number(report.mean)},
          {"included_pairs", report.included_pairs},
          {"per_class", per_class}};
}

nlohmann::json to_json(const ConsistencyReport& report) {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& c : report.per_class) {
    per_class[c.class_name] = {{"fp_slice_rate", number(c.fp_slice_rate)},
                               {"absent_slices", c.absent_slices},
                               {"flagged_slices", c.flagged_slices}};
  }
  return {{"tau_area", report.tau_area}, {"per_class", per_class}};
}

nlohmann::json to_json(const EvaluationResult& result) {
  return {{"dice", to_json(result.dice)},
          {"consistency", to_json(result.consistency)},
          {"mean_gate", number(result.mean_gate)}};
}

nlohmann::json to_json(const AblationReport& report) {
  nlohmann::json mapping = nlohmann::json::object();
  for (std::size_t i = 0; i < report.class_names.size(); ++i) mapping[report.class_names[i]] = report.prompts[i];
  return {{"mode", to_string(report.mode)},
          {"prompts", mapping},
          {"correct", to_json(report.correct)},
          {"corrupted", to_json(report.corrupted)},
          {"relative_change", number(report.relative_change)}};
}

nlohmann::json to_json(const CrossDomainReport& report) {
  return {{"domain", report.domain},
          {"reference", to_json(report.reference)},
          {"report", to_json(report.report)},
          {"relative_drop", number(report.relative_drop)}};
}

std::string render_table(const DiceReport& first, const DiceReport* second, const std::string& first_label,
                         const std::string& second_label) {
  std::ostringstream os;
  char line[160];
  if (second) {
    std::snprintf(line, sizeof line, "%-16s %10s %10s %10s\n", "class", first_label.c_str(), second_label.c_str(),
                  "delta");
  } else {
    std::snprintf(line, sizeof line, "%-16s %10s\n", "class", first_label.c_str());
  }
  os << line;
  auto row = [&](const std::string& name, const std::optional<double>& a, const std::optional<double>& b) {
    if (second) {
      std::optional<double> d;
      if (a && b) d = *b - *a;
      std::snprintf(line, sizeof line, "%-16s %10s %10s %10s\n", name.c_str(), format_optional(a, 3).c_str(),
                    format_optional(b, 3).c_str(), d ? ((*d >= 0 ? "+" : "") + format_number(*d, 3)).c_str() : "n/a");
    } else {
      std::snprintf(line, sizeof line, "%-16s %10s\n", name.c_str(), format_optional(a, 3).c_str());
    }
    os << line;
  };
  for (const auto& c : first.per_class) row(c.class_name, c.mean, second ? second->class_mean(c.class_name) : std::nullopt);
  row("mean", first.mean, second ? std::optional<double>(second->mean) : std::nullopt);
  return os.str();
}

std::string render_ablation(const AblationReport& report) {
  std::ostringstream os;
  os << "prompt ablation: " << to_string(report.mode) << "\n";
  for (std::size_t i = 0; i < report.class_names.size(); ++i) {
    os << "  " << report.class_names[i] << " -> " << (report.prompts[i].empty() ? "<blank>" : report.prompts[i])
       << "\n";
  }
  os << render_table(report.correct, &report.corrupted, "correct", to_string(report.mode));
  os << "relative change: " << format_number(100.0 * report.relative_change, 1) << "%\n";
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace slicegate::evaluation
