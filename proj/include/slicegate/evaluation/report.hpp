// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Report serialisation: per-pair CSV, aggregate JSON and a plain-text
// per-class comparison table. Numbers are printed with fixed precision so
// reruns produce byte-identical files.

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "slicegate/evaluation/metrics.hpp"
#include "slicegate/evaluation/protocols.hpp"

namespace slicegate::evaluation {

std::string format_number(double value, int decimals = 6);
std::string format_optional(const std::optional<double>& value, int decimals = 6);

/// Header: volume_id,class,dice,included
std::string pairs_csv(const DiceReport& report);

nlohmann::json to_json(const DiceReport& report);
nlohmann::json to_json(const ConsistencyReport& report);
nlohmann::json to_json(const EvaluationResult& result);
nlohmann::json to_json(const AblationReport& report);
nlohmann::json to_json(const CrossDomainReport& report);

/// Rows: class, mean Dice per report, and Δ = second - first when two are given.
std::string render_table(const DiceReport& first, const DiceReport* second = nullptr,
                         const std::string& first_label = "baseline", const std::string& second_label = "temporal");

std::string render_ablation(const AblationReport& report);

/// Writes `text` verbatim; throws std::runtime_error on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace slicegate::evaluation
