// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include "slicegate/cli/commands.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "slicegate/evaluation/report.hpp"
#include "slicegate/model/checkpoint.hpp"

namespace slicegate::cli {

namespace fs = std::filesystem;
using evaluation::format_number;
using evaluation::format_optional;

namespace {

// "dir/file" so two best.ckpt files from different runs stay distinguishable
// while the report itself does not depend on where the runs live.
std::string checkpoint_label(const fs::path& p) {
  const auto parent = p.parent_path().filename();
  return parent.empty() ? p.filename().string() : (parent / p.filename()).string();
}

adapter::SegmentationModel<float> load_for_eval(const fs::path& checkpoint, std::optional<adapter::ModelKind> as_kind,
                                                std::optional<double> forced_gate) {
  if (!fs::exists(checkpoint)) throw data::DatasetError("checkpoint not found: " + checkpoint.string());
  auto model = adapter::load_model<float>(checkpoint, as_kind);
  if (forced_gate) model.set_forced_gate(forced_gate);
  return model;
}

std::vector<data::PreparedVolume> load_domain(const fs::path& dataset, const data::DatasetManifest& manifest,
                                              const std::string& split, data::Domain domain) {
  return data::load_split(dataset, manifest, split, domain);
}

std::string render_consistency(const evaluation::ConsistencyReport& first,
                               const evaluation::ConsistencyReport* second, const std::string& first_label,
                               const std::string& second_label) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %10s", ("fp_rate@" + std::to_string(first.tau_area)).c_str(),
                first_label.c_str());
  os << line;
  if (second) {
    std::snprintf(line, sizeof line, " %10s", second_label.c_str());
    os << line;
  }
  os << "\n";
  for (std::size_t k = 0; k < first.per_class.size(); ++k) {
    std::snprintf(line, sizeof line, "%-16s %10s", first.per_class[k].class_name.c_str(),
                  format_optional(first.per_class[k].fp_slice_rate, 3).c_str());
    os << line;
    if (second) {
      std::snprintf(line, sizeof line, " %10s", format_optional(second->per_class[k].fp_slice_rate, 3).c_str());
      os << line;
    }
    os << "\n";
  }
  return os.str();
}

evaluation::DiceReport dice_from_json(const nlohmann::json& j) {
  evaluation::DiceReport r;
  r.model_kind = j.at("model_kind").get<std::string>();
  r.domain = j.at("domain").get<std::string>();
  r.mean = j.at("mean").get<double>();
  r.included_pairs = j.at("included_pairs").get<std::size_t>();
  for (const auto& [name, v] : j.at("per_class").items()) {
    evaluation::ClassMean c;
    c.class_name = name;
    if (!v.at("mean").is_null()) c.mean = v.at("mean").get<double>();
    c.volumes = v.at("volumes").get<std::size_t>();
    r.per_class.push_back(c);
  }
  return r;
}

}  // namespace

data::DatasetManifest cmd_gen_data(const RunConfig& config, const fs::path& out_dir, std::ostream& log) {
  config.validate();
  const auto manifest = data::generate_dataset(out_dir, config.dataset_config());
  log << "wrote " << manifest.entries.size() << " volumes and " << (out_dir / data::kManifestName).string() << "\n";
  return manifest;
}

training::TrainResult cmd_train(const RunConfig& config, const fs::path& dataset, const fs::path& out_dir,
                                std::ostream& log) {
  config.validate();
  const auto tc = config.train_config();
  const auto train_data = training::load_train_data(dataset);
  training::TrainHooks hooks;
  hooks.on_epoch = [&](const training::EpochRecord& r) {
    log << "epoch " << r.epoch << " loss " << format_number(r.loss_total, 4) << " val mean dice "
        << format_number(r.val_mean_dice, 4);
    if (r.val_mean_gate) log << " mean gate " << format_number(*r.val_mean_gate, 4);
    log << "\n";
    log.flush();
  };
  log << "training " << adapter::to_string(tc.model_kind) << " model, seed " << tc.seed << ", " << tc.epochs
      << " epochs x " << tc.steps_per_epoch << " steps\n";
  auto result = training::train(tc, train_data, out_dir, hooks);
  log << "best epoch " << result.best.epoch << " val mean dice " << format_number(result.best.val_mean_dice, 4)
      << " -> " << result.best.path.string() << "\n";
  return result;
}

std::vector<evaluation::EvaluationResult> cmd_eval(const RunConfig& config, const EvalRequest& request,
                                                   std::ostream& log) {
  if (request.checkpoints.empty() || request.checkpoints.size() > 2) {
    throw ConfigError("eval takes one or two checkpoints");
  }
  const auto manifest = data::read_manifest(request.dataset);
  const auto names = data::class_names(manifest.classes);
  const auto volumes = load_domain(request.dataset, manifest, request.split, request.domain);
  std::optional<std::vector<data::PreparedVolume>> reference_volumes;
  if (request.domain != data::Domain::train) {
    reference_volumes = load_domain(request.dataset, manifest, request.split, data::Domain::train);
  }

  evaluation::EvaluateOptions options;
  options.tau_area = config.report.tau_area;
  std::vector<evaluation::EvaluationResult> results;
  std::vector<std::string> labels;
  nlohmann::json models = nlohmann::json::array();
  for (std::size_t i = 0; i < request.checkpoints.size(); ++i) {
    const auto& ckpt = request.checkpoints[i];
    const auto model = load_for_eval(ckpt, request.as_kind, request.forced_gate);
    auto result = evaluation::evaluate(model, volumes, names, options);
    result.dice.domain = data::to_string(request.domain);
    nlohmann::json entry{{"checkpoint", checkpoint_label(ckpt)},
                         {"model_kind", adapter::to_string(model.kind())},
                         {"forced_gate", model.forced_gate() ? nlohmann::json(*model.forced_gate()) : nlohmann::json()},
                         {"evaluation", evaluation::to_json(result)}};
    if (reference_volumes) {
      auto reference = evaluation::evaluate(model, *reference_volumes, names, options).dice;
      reference.domain = data::to_string(data::Domain::train);
      evaluation::CrossDomainReport cross{result.dice.domain, reference, result.dice,
                                          evaluation::relative_drop(reference.mean, result.dice.mean)};
      entry["cross_domain"] = evaluation::to_json(cross);
      log << checkpoint_label(ckpt) << ": " << result.dice.domain << " relative drop "
          << format_number(100.0 * cross.relative_drop, 1) << "%\n";
    }
    models.push_back(entry);
    evaluation::write_text(request.out_dir / ("pairs_" + std::to_string(i) + ".csv"), evaluation::pairs_csv(result.dice));
    std::string label = adapter::to_string(model.kind());
    if (request.forced_gate) label += "@g=" + format_number(*request.forced_gate, 2);
    labels.push_back(label);
    results.push_back(std::move(result));
  }
  if (labels.size() == 2 && labels[0] == labels[1]) {
    labels[0] += "#1";
    labels[1] += "#2";
  }
  const nlohmann::json doc{{"domain", data::to_string(request.domain)},
                           {"split", request.split},
                           {"tau_area", config.report.tau_area},
                           {"volumes", volumes.size()},
                           {"models", models}};
  evaluation::write_json(request.out_dir / "eval.json", doc);
  const auto* second = results.size() == 2 ? &results[1] : nullptr;
  std::string table = "domain " + data::to_string(request.domain) + ", split " + request.split + ", " +
                      std::to_string(volumes.size()) + " volumes\n";
  table += evaluation::render_table(results[0].dice, second ? &second->dice : nullptr, labels[0],
                                    second ? labels[1] : std::string());
  table += "\n" + render_consistency(results[0].consistency, second ? &second->consistency : nullptr, labels[0],
                                     second ? labels[1] : std::string());
  evaluation::write_text(request.out_dir / "table.txt", table);
  log << table;
  return results;
}

evaluation::AblationReport cmd_ablate(const RunConfig& config, const AblateRequest& request, std::ostream& log) {
  (void)config;
  const auto manifest = data::read_manifest(request.dataset);
  const auto names = data::class_names(manifest.classes);
  const auto volumes = load_domain(request.dataset, manifest, request.split, data::Domain::train);
  const auto model = load_for_eval(request.checkpoint, std::nullopt, std::nullopt);
  const auto report = evaluation::prompt_ablation(model, volumes, names, request.mode);
  const auto mode = evaluation::to_string(request.mode);
  auto j = evaluation::to_json(report);
  j["checkpoint"] = checkpoint_label(request.checkpoint);
  evaluation::write_json(request.out_dir / ("ablation_" + mode + ".json"), j);
  const auto text = evaluation::render_ablation(report);
  evaluation::write_text(request.out_dir / ("ablation_" + mode + ".txt"), text);
  log << text;
  return report;
}

std::string cmd_report(const fs::path& first, const fs::path& second, const std::string& first_label,
                       const std::string& second_label, const std::optional<fs::path>& out) {
  auto read = [](const fs::path& p) {
    std::ifstream is(p);
    if (!is) throw data::DatasetError("cannot read report " + p.string());
    try {
      const auto j = nlohmann::json::parse(is);
      return dice_from_json(j.at("models").at(0).at("evaluation").at("dice"));
    } catch (const nlohmann::json::exception& e) {
      throw data::DatasetError("malformed report " + p.string() + ": " + e.what());
    }
  };
  const auto a = read(first);
  const auto b = read(second);
  const auto table = evaluation::render_table(a, &b, first_label, second_label);
  if (out) evaluation::write_text(*out, table);
  return table;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"slicegate: slice-context segmentation toolkit"};
  app.require_subcommand(1);
  std::optional<std::string> config_path;
  app.add_option("--config", config_path, "JSON run configuration");

  std::optional<std::string> seed_flag, out_flag, data_flag;
  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate the synthetic benchmark");
  std::optional<std::string> domains_flag;
  std::optional<std::size_t> n_train, n_val, n_test;
  gen->add_option("--out", out_flag, "dataset directory (default <output_dir>/data)");
  gen->add_option("--seed", seed_flag, "dataset seed");
  gen->add_option("--domains", domains_flag, "comma-separated domains (train,shift,modality)");
  gen->add_option("--train-volumes", n_train);
  gen->add_option("--val-volumes", n_val);
  gen->add_option("--test-volumes", n_test);
  // train
  auto* tr = app.add_subcommand("train", "train a baseline or temporal model");
  std::optional<std::string> model_flag;
  std::optional<std::size_t> epochs, steps, batch;
  std::optional<double> lambda_gate, lr_mult, forced_gate_train;
  std::optional<std::string> init_ckpt;
  bool no_augment = false;
  tr->add_option("--data", data_flag, "dataset manifest or directory (default <output_dir>/data)");
  tr->add_option("--out", out_flag, "run directory (default <output_dir>/<model>_seed<seed>)");
  tr->add_option("--model", model_flag, "baseline or temporal");
  tr->add_option("--seed", seed_flag, "run seed");
  tr->add_option("--epochs", epochs);
  tr->add_option("--steps-per-epoch", steps);
  tr->add_option("--batch-size", batch);
  tr->add_option("--lambda-gate", lambda_gate);
  tr->add_option("--lr-multiplier", lr_mult);
  tr->add_option("--forced-gate", forced_gate_train, "clamp the gate to a constant (diagnostics)");
  tr->add_option("--init-checkpoint", init_ckpt, "start from these weights; missing adapter weights stay at init");
  tr->add_flag("--no-augment", no_augment);
  // eval
  auto* ev = app.add_subcommand("eval", "score checkpoints on a test split");
  std::vector<std::string> checkpoints;
  std::string domain_flag = "train", split_flag = "test";
  std::optional<std::string> as_kind_flag;
  std::optional<double> forced_gate_eval;
  std::optional<std::size_t> tau_flag;
  ev->add_option("--checkpoint", checkpoints, "checkpoint file (repeat for a comparison)")->required();
  ev->add_option("--data", data_flag);
  ev->add_option("--domain", domain_flag, "train, shift or modality");
  ev->add_option("--split", split_flag);
  ev->add_option("--as-kind", as_kind_flag, "load the checkpoint as baseline or temporal");
  ev->add_option("--forced-gate", forced_gate_eval);
  ev->add_option("--tau-area", tau_flag);
  ev->add_option("--out", out_flag, "report directory (default <output_dir>/eval_<domain>)");
  // ablate
  auto* ab = app.add_subcommand("ablate", "prompt-corruption ablation");
  std::string checkpoint, mode_flag = "blank";
  ab->add_option("--checkpoint", checkpoint)->required();
  ab->add_option("--data", data_flag);
  ab->add_option("--mode", mode_flag, "blank or wrong");
  ab->add_option("--split", split_flag);
  ab->add_option("--out", out_flag, "report directory (default <output_dir>/ablation)");
  // report
  auto* rp = app.add_subcommand("report", "compare two eval.json files");
  std::string first, second, first_label = "baseline", second_label = "temporal";
  rp->add_option("first", first)->required();
  rp->add_option("second", second)->required();
  rp->add_option("--first-label", first_label);
  rp->add_option("--second-label", second_label);
  rp->add_option("--out", out_flag, "write the table to this file");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      out << app.help();
      return kOk;
    } catch (const CLI::CallForAllHelp& e) {
      out << app.help();
      return kOk;
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << "\n";
      return kConfigError;
    }
    auto config = load_run_config(config_path ? std::optional<fs::path>(*config_path) : std::nullopt);
    if (seed_flag) {
      config.seed = parse_seed(*seed_flag, "--seed");
      config.train.seed = config.seed;
    }
    const fs::path root = config.output_dir;
    const fs::path dataset = data_flag ? fs::path(*data_flag) : root / "data";

    if (gen->parsed()) {
      if (domains_flag) {
        config.data.domains.clear();
        std::stringstream ss(*domains_flag);
        for (std::string d; std::getline(ss, d, ',');) config.data.domains.push_back(data::parse_domain(d));
        if (std::find(config.data.domains.begin(), config.data.domains.end(), data::Domain::train) ==
            config.data.domains.end()) {
          config.data.domains.insert(config.data.domains.begin(), data::Domain::train);
        }
      }
      if (n_train) config.data.train_volumes = *n_train;
      if (n_val) config.data.val_volumes = *n_val;
      if (n_test) config.data.test_volumes = *n_test;
      cmd_gen_data(config, out_flag ? fs::path(*out_flag) : root / "data", out);
    } else if (tr->parsed()) {
      if (model_flag) config.train.model_kind = adapter::parse_model_kind(*model_flag);
      if (epochs) config.train.epochs = *epochs;
      if (steps) config.train.steps_per_epoch = *steps;
      if (batch) config.train.batch_size = *batch;
      if (lambda_gate) config.train.lambda_gate = *lambda_gate;
      if (lr_mult) config.train.lr_multiplier = *lr_mult;
      if (forced_gate_train) config.train.forced_gate = *forced_gate_train;
      if (init_ckpt) config.train.init_checkpoint = *init_ckpt;
      if (no_augment) config.train.augment = false;
      const fs::path run = out_flag ? fs::path(*out_flag)
                                    : root / (adapter::to_string(config.train.model_kind) + "_seed" +
                                              std::to_string(config.seed));
      cmd_train(config, dataset, run, out);
    } else if (ev->parsed()) {
      if (tau_flag) config.report.tau_area = *tau_flag;
      EvalRequest req;
      for (const auto& c : checkpoints) req.checkpoints.emplace_back(c);
      req.dataset = dataset;
      req.domain = data::parse_domain(domain_flag);
      req.split = split_flag;
      if (as_kind_flag) req.as_kind = adapter::parse_model_kind(*as_kind_flag);
      req.forced_gate = forced_gate_eval;
      req.out_dir = out_flag ? fs::path(*out_flag) : root / ("eval_" + domain_flag);
      cmd_eval(config, req, out);
    } else if (ab->parsed()) {
      AblateRequest req;
      req.checkpoint = checkpoint;
      req.dataset = dataset;
      req.mode = evaluation::parse_ablation_mode(mode_flag);
      req.split = split_flag;
      req.out_dir = out_flag ? fs::path(*out_flag) : root / "ablation";
      cmd_ablate(config, req, out);
    } else if (rp->parsed()) {
      out << cmd_report(first, second, first_label, second_label,
                        out_flag ? std::optional<fs::path>(*out_flag) : std::nullopt);
    }
    return kOk;
  } catch (const training::TrainingError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumericError;
  } catch (const numerics::NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumericError;
  } catch (const data::DatasetError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const data::VolumeFormatError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const model::CheckpointError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const nlohmann::json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kOtherError;
  }
}

}  // namespace slicegate::cli
