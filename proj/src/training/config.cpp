// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include "slicegate/training/config.hpp"

#include <stdexcept>

namespace slicegate::training {

void TrainConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("epochs must be at least 1");
  if (steps_per_epoch == 0) throw std::invalid_argument("steps_per_epoch must be at least 1");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be at least 1");
  if (!(lambda_gate >= 0.0)) throw std::invalid_argument("lambda_gate must be non-negative");
  if (!(lr_encoder > 0.0 && lr_encoder < lr_decoder && lr_decoder < lr_adapter)) {
    throw std::invalid_argument("learning rates must satisfy 0 < lr_encoder < lr_decoder < lr_adapter");
  }
  if (!(lr_multiplier > 0.0)) throw std::invalid_argument("lr_multiplier must be positive");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be non-negative");
  if (!(t0 > 0.0)) throw std::invalid_argument("T0 must be positive");
  if (forced_gate && !(*forced_gate >= 0.0 && *forced_gate <= 1.0)) {
    throw std::invalid_argument("forced_gate must lie in [0, 1]");
  }
  adapter.validate(backbone.token_width);
}

adapter::ModelConfig TrainConfig::model_config(const std::vector<std::string>& vocabulary) const {
  adapter::ModelConfig m;
  m.kind = model_kind;
  m.backbone = backbone;
  m.backbone.vocabulary = vocabulary;
  m.adapter = adapter;
  m.backbone.validate();
  return m;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"epochs", c.epochs},
                     {"steps_per_epoch", c.steps_per_epoch},
                     {"batch_size", c.batch_size},
                     {"lambda_gate", c.lambda_gate},
                     {"lr_encoder", c.lr_encoder},
                     {"lr_decoder", c.lr_decoder},
                     {"lr_adapter", c.lr_adapter},
                     {"lr_multiplier", c.lr_multiplier},
                     {"weight_decay", c.weight_decay},
                     {"t0", c.t0},
                     {"seed", c.seed},
                     {"model_kind", adapter::to_string(c.model_kind)},
                     {"augment", c.augment},
                     {"forced_gate", c.forced_gate ? nlohmann::json(*c.forced_gate) : nlohmann::json(nullptr)},
                     {"init_checkpoint", c.init_checkpoint},
                     {"backbone", c.backbone},
                     {"adapter", c.adapter}};
}

void reject_unknown_keys(const nlohmann::json& j, const nlohmann::json& schema, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!schema.contains(key)) throw std::invalid_argument("unknown configuration key '" + path + "'");
    if (value.is_object() && schema.at(key).is_object()) reject_unknown_keys(value, schema.at(key), path);
  }
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  const nlohmann::json defaults = TrainConfig{};
  reject_unknown_keys(j, defaults, "train");
  nlohmann::json merged = defaults;
  for (const auto& [key, value] : j.items()) {
    if (value.is_object()) {
      for (const auto& [k2, v2] : value.items()) merged[key][k2] = v2;
    } else {
      merged[key] = value;
    }
  }
  TrainConfig out;
  merged.at("epochs").get_to(out.epochs);
  merged.at("steps_per_epoch").get_to(out.steps_per_epoch);
  merged.at("batch_size").get_to(out.batch_size);
  merged.at("lambda_gate").get_to(out.lambda_gate);
  merged.at("lr_encoder").get_to(out.lr_encoder);
  merged.at("lr_decoder").get_to(out.lr_decoder);
  merged.at("lr_adapter").get_to(out.lr_adapter);
  merged.at("lr_multiplier").get_to(out.lr_multiplier);
  merged.at("weight_decay").get_to(out.weight_decay);
  merged.at("t0").get_to(out.t0);
  merged.at("seed").get_to(out.seed);
  out.model_kind = adapter::parse_model_kind(merged.at("model_kind").get<std::string>());
  merged.at("augment").get_to(out.augment);
  if (!merged.at("forced_gate").is_null()) out.forced_gate = merged.at("forced_gate").get<double>();
  merged.at("init_checkpoint").get_to(out.init_checkpoint);
  merged.at("backbone").get_to(out.backbone);
  merged.at("adapter").get_to(out.adapter);
  c = std::move(out);
}

}  // namespace slicegate::training
