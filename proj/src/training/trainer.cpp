// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include "slicegate/training/trainer.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

#include "slicegate/data/manifest.hpp"
#include "slicegate/data/sampling.hpp"
#include "slicegate/evaluation/protocols.hpp"
#include "slicegate/evaluation/report.hpp"
#include "slicegate/numerics/ops.hpp"
#include "slicegate/training/losses.hpp"

namespace slicegate::training {

using evaluation::format_number;
using evaluation::format_optional;
using numerics::Rng;

namespace {

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

// Streams derived from the run seed; the model itself uses forks 1 and 2.
constexpr std::uint64_t kIndexStream = 3;
constexpr std::uint64_t kDataStream = 4;
constexpr std::uint64_t kDropPathStream = 5;

std::string iso_time(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string batch_id(std::size_t epoch, std::size_t step, const data::SampleIndex& index,
                     const std::vector<std::size_t>& entries) {
  std::string s = "epoch " + std::to_string(epoch) + " step " + std::to_string(step) + " [";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = index.entries[entries[i]];
    if (i) s += ", ";
    s += e.volume_id + ":z" + std::to_string(e.z) + ":" + e.class_name + (e.is_negative ? ":neg" : "");
  }
  return s + "]";
}

std::string csv_row(const EpochRecord& r, bool train_row, std::size_t classes) {
  std::string s = std::to_string(r.epoch) + (train_row ? ",train," : ",val,");
  if (train_row) {
    s += ",";
    for (std::size_t k = 0; k < classes; ++k) s += ",";
    s += format_optional(r.train_mean_gate) + "," + format_optional(r.lens_positive_gate) + ",";
    s += format_number(r.loss_total) + "," + format_number(r.loss_bce) + "," + format_number(r.loss_dice) + "," +
         format_number(r.loss_gate);
  } else {
    s += format_number(r.val_mean_dice) + ",";
    for (const auto& d : r.val_class_dice) s += format_optional(d) + ",";
    s += format_optional(r.val_mean_gate) + ",,,,,";
  }
  return s + "\n";
}

}  // namespace

std::string parameter_group(const std::string& name) {
  if (starts_with(name, "encoder.") || starts_with(name, "prompt.")) return "encoder";
  if (starts_with(name, "decoder.")) return "decoder";
  if (starts_with(name, "adapter.")) return "adapter";
  throw std::invalid_argument("parameter '" + name + "' has no module prefix (encoder., prompt., decoder., adapter.)");
}

template <typename T>
std::vector<numerics::ParamGroup<T>> make_param_groups(const numerics::ParameterList<T>& parameters,
                                                       const TrainConfig& config) {
  std::vector<numerics::ParamGroup<T>> groups{
      {"encoder", {}, config.lr_encoder * config.lr_multiplier, config.weight_decay},
      {"decoder", {}, config.lr_decoder * config.lr_multiplier, config.weight_decay},
      {"adapter", {}, config.lr_adapter * config.lr_multiplier, config.weight_decay}};
  for (const auto& p : parameters) {
    const auto g = parameter_group(p.name);
    for (auto& group : groups) {
      if (group.name == g) group.parameters.push_back(p.tensor);
    }
  }
  std::erase_if(groups, [](const auto& g) { return g.parameters.empty(); });
  return groups;
}

template std::vector<numerics::ParamGroup<float>> make_param_groups(const numerics::ParameterList<float>&,
                                                                    const TrainConfig&);
template std::vector<numerics::ParamGroup<double>> make_param_groups(const numerics::ParameterList<double>&,
                                                                     const TrainConfig&);

std::size_t select_best(const std::vector<double>& val_mean_dice) {
  if (val_mean_dice.empty()) throw std::invalid_argument("select_best: no epochs");
  std::size_t best = 0;
  for (std::size_t i = 1; i < val_mean_dice.size(); ++i) {
    if (val_mean_dice[i] > val_mean_dice[best]) best = i;
  }
  return best;
}

std::string metrics_header(const std::vector<std::string>& class_names) {
  std::string s = "epoch,split,mean_dice,";
  for (const auto& c : class_names) s += "dice_" + c + ",";
  return s + "mean_gate,lens_positive_gate,loss_total,loss_bce,loss_dice,loss_gate\n";
}

TrainData load_train_data(const std::filesystem::path& manifest_path) {
  const auto manifest = data::read_manifest(manifest_path);
  TrainData d;
  d.classes = manifest.classes;
  d.train = data::load_split(manifest_path, manifest, "train", data::Domain::train);
  d.val = data::load_split(manifest_path, manifest, "val", data::Domain::train);
  d.dataset = manifest_path.string();
  return d;
}

TrainResult train(const TrainConfig& config, const TrainData& data, const std::filesystem::path& out_dir,
                  const TrainHooks& hooks) {
  config.validate();
  if (data.train.empty() || data.val.empty()) throw std::invalid_argument("train: need train and val volumes");
  const auto started = std::chrono::system_clock::now();
  const auto names = data::class_names(data.classes);
  auto model = adapter::SegmentationModel<float>::init(config.model_config(names), config.seed);
  model.set_forced_gate(config.forced_gate);
  if (!config.init_checkpoint.empty()) {
    const auto ckpt = model::read_checkpoint(config.init_checkpoint);
    const nlohmann::json want = config.model_config(names).backbone;
    if (!ckpt.config.contains("backbone") || ckpt.config.at("backbone") != want) {
      throw TrainingError("init checkpoint " + config.init_checkpoint + " has a different backbone configuration");
    }
    model::load_parameters(ckpt, model.parameters(), "adapter.");
  }

  const auto index = data::build_sample_index(data.train, data.classes, Rng(config.seed).fork(kIndexStream).next_u64());
  const data::WeightedSampler sampler(index);
  Rng data_rng = Rng(config.seed).fork(kDataStream);
  Rng drop_rng = Rng(config.seed).fork(kDropPathStream);

  auto params = model.parameters();
  auto groups = make_param_groups(params, config);
  numerics::SchedulerState schedule;
  for (const auto& g : groups) schedule.base_lr_per_group.push_back(g.learning_rate);
  schedule.t0 = config.t0;
  numerics::AdamW<float> optimizer;

  std::optional<std::size_t> lens_class;
  for (std::size_t k = 0; k < data.classes.size(); ++k) {
    if (data.classes[k].archetype == data::Archetype::lens) lens_class = k;
  }

  std::filesystem::create_directories(out_dir);
  TrainResult result;
  result.metrics_log = out_dir / "metrics.csv";
  result.last_checkpoint = out_dir / "last.ckpt";
  result.run_manifest = out_dir / "run_manifest.json";
  const auto best_path = out_dir / "best.ckpt";
  std::ofstream log(result.metrics_log, std::ios::binary | std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write " + result.metrics_log.string());
  log << metrics_header(names);
  if (model.kind() == adapter::ModelKind::temporal) {
    result.initial_gate = 1.0 / (1.0 + std::exp(-config.adapter.gate_bias_init));
  }

  const std::size_t H = config.backbone.slice_rows, W = config.backbone.slice_cols, plane = H * W;
  std::size_t global_step = 0;
  std::vector<double> val_history;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    double gate_sum = 0.0, lens_gate_sum = 0.0;
    std::size_t gate_n = 0, lens_n = 0;
    for (std::size_t step = 0; step < config.steps_per_epoch; ++step) {
      const double t = static_cast<double>(epoch) +
                       static_cast<double>(step) / static_cast<double>(config.steps_per_epoch);
      const auto lrs = numerics::lr_at_epoch(schedule, t);
      for (std::size_t g = 0; g < groups.size(); ++g) groups[g].learning_rate = lrs[g];

      const auto batch = data::sample_batch(index, sampler, data.train, data.classes, config.batch_size, data_rng,
                                            config.augment);
      const std::size_t B = batch.stacks.size();
      std::vector<float> stacks(B * adapter::kWindow * plane);
      std::vector<float> target(B * plane);
      std::vector<std::string> prompts(B);
      for (std::size_t b = 0; b < B; ++b) {
        const auto& s = batch.stacks[b];
        std::copy(s.slices.begin(), s.slices.end(), stacks.begin() + static_cast<std::ptrdiff_t>(b * s.slices.size()));
        for (std::size_t i = 0; i < plane; ++i) target[b * plane + i] = static_cast<float>(s.target_mask[i]);
        prompts[b] = s.class_name;
      }

      StepInfo info{epoch, step, global_step + 1, 0, 0, 0, 0};
      std::optional<adapter::GateDiagnostics<float>> gate;
      try {
        auto out = model.forward(stacks, prompts, true, &drop_rng);
        const numerics::Tensor<float> tgt({B, H, W}, std::move(target));
        gate = std::move(out.gate);
        auto terms = total_loss(out.logits.logits, tgt, gate ? &*gate : nullptr, config.lambda_gate);
        const double total = static_cast<double>(terms.total.item());
        if (!std::isfinite(total)) throw numerics::NumericError("non-finite loss");
        info.loss_total = total;
        info.loss_bce = terms.bce;
        info.loss_dice = terms.dice;
        info.loss_gate = terms.penalty;
        for (auto& p : params) p.tensor.zero_grad();
        terms.total.backward();
      } catch (const numerics::NumericError& e) {
        throw TrainingError("numeric failure at " + batch_id(epoch, step, index, batch.entries) + ": " + e.what());
      }
      optimizer.step(groups, ++global_step);

      rec.loss_total += info.loss_total;
      rec.loss_bce += info.loss_bce;
      rec.loss_dice += info.loss_dice;
      rec.loss_gate += info.loss_gate;
      if (gate) {
        const auto g = gate->g.values();
        const std::size_t L = g.size() / B;
        for (std::size_t b = 0; b < B; ++b) {
          double m = 0.0;
          for (std::size_t l = 0; l < L; ++l) m += g[b * L + l];
          m /= static_cast<double>(L);
          gate_sum += m;
          ++gate_n;
          const auto& e = index.entries[batch.entries[b]];
          if (lens_class && e.class_index == *lens_class && !e.is_negative) {
            lens_gate_sum += m;
            ++lens_n;
          }
        }
      }
      if (hooks.on_step) hooks.on_step(info);
      if (hooks.after_step) hooks.after_step(info, model);
    }
    const double steps = static_cast<double>(config.steps_per_epoch);
    rec.loss_total /= steps;
    rec.loss_bce /= steps;
    rec.loss_dice /= steps;
    rec.loss_gate /= steps;
    if (gate_n) rec.train_mean_gate = gate_sum / static_cast<double>(gate_n);
    if (lens_n) rec.lens_positive_gate = lens_gate_sum / static_cast<double>(lens_n);

    const auto val = evaluation::evaluate(model, data.val, names);
    rec.val_mean_dice = val.dice.mean;
    for (const auto& c : val.dice.per_class) rec.val_class_dice.push_back(c.mean);
    rec.val_mean_gate = val.mean_gate;

    const nlohmann::json meta{{"init_seed", config.seed},
                              {"epoch", epoch},
                              {"val_mean_dice", evaluation::format_number(rec.val_mean_dice)}};
    adapter::save_model(result.last_checkpoint, model, meta);
    val_history.push_back(rec.val_mean_dice);
    if (select_best(val_history) == epoch) {
      std::filesystem::copy_file(result.last_checkpoint, best_path, std::filesystem::copy_options::overwrite_existing);
      result.best = {epoch, rec.val_mean_dice, best_path};
    }
    log << csv_row(rec, true, names.size()) << csv_row(rec, false, names.size());
    log.flush();
    if (hooks.on_epoch) hooks.on_epoch(rec);
    result.epochs.push_back(std::move(rec));
  }

  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& r : result.epochs) {
    epochs.push_back({{"epoch", r.epoch},
                      {"val_mean_dice", format_number(r.val_mean_dice)},
                      {"loss_total", format_number(r.loss_total)}});
  }
  const auto finished = std::chrono::system_clock::now();
  const nlohmann::json manifest{
      {"config", config},
      {"dataset", data.dataset},
      {"classes", data.classes},
      {"seeds",
       {{"run", config.seed},
        {"model_init", config.seed},
        {"index_stream", kIndexStream},
        {"data_stream", kDataStream},
        {"drop_path_stream", kDropPathStream}}},
      {"sample_index", {{"entries", index.entries.size()}, {"weighted_negative_fraction", index.weighted_negative_fraction()}}},
      {"epochs", epochs},
      {"best", {{"epoch", result.best.epoch}, {"val_mean_dice", format_number(result.best.val_mean_dice)},
                {"path", result.best.path.filename().string()}}},
      {"started_at", iso_time(started)},
      {"finished_at", iso_time(finished)},
      {"wall_seconds", std::chrono::duration<double>(finished - started).count()}};
  evaluation::write_json(result.run_manifest, manifest);
  return result;
}

}  // namespace slicegate::training
