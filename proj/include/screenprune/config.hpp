#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "screenprune/dataset.hpp"
#include "screenprune/models.hpp"
#include "screenprune/optimizer.hpp"
#include "screenprune/ranking.hpp"
#include "screenprune/schedule.hpp"

namespace screenprune {

/// Thrown with every offending field listed, one per line.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::vector<std::string>& problems)
      : std::runtime_error(join(problems)) {}
  static std::string join(const std::vector<std::string>& problems) {
    std::string msg = "invalid config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    return msg;
  }
};

struct DatasetConfig {
  std::string name = "mnist";  // mnist | cifar10 | synth_digits | synth_rgb
  std::string root;            // empty: resolved from --data-root / SCREENPRUNE_DATA / ./data
  std::size_t train_limit = 0;  // 0 = use everything
  std::size_t test_limit = 0;
  AugmentMode augment = AugmentMode::none;
  std::vector<double> norm_mean;  // empty = dataset default
  std::vector<double> norm_std;
  std::size_t synth_train = 12000;  // synth_* generation sizes
  std::size_t synth_test = 2000;
};

struct ModelConfig {
  std::string name = "lenet_300_100";  // lenet_300_100 | small_bn_cnn | tiny_bn_cnn | custom
  nlohmann::json custom_layers;        // for name == custom
};

enum class PruneMethod { none, wls, cls };

struct PruneConfig {
  PruneMethod method = PruneMethod::none;
  PruneSchedule schedule;
  RankingConfig ranking;
  std::size_t fine_tune_epochs = 0;
  double fine_tune_lr = 0.001;
};

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 128;
  std::size_t eval_batch_size = 512;
  std::uint64_t seed = 1;
  std::uint64_t init_seed = 0;  // 0: derive from seed
};

struct ExperimentConfig {
  DatasetConfig dataset;
  ModelConfig model;
  SgdConfig sgd;
  LrSchedule lr;
  PruneConfig prune;
  TrainConfig train;
  std::string output_dir = "runs/out";

  std::uint64_t effective_init_seed() const {
    return train.init_seed ? train.init_seed : train.seed + 0x517cc1b727220a95ULL;
  }
};

namespace config_detail {

inline void check_keys(const nlohmann::json& obj, const std::vector<std::string>& allowed,
                       const std::string& scope, std::vector<std::string>& problems) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      problems.push_back(scope + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
T get_or(const nlohmann::json& obj, const std::string& key, T fallback,
         std::vector<std::string>& problems, const std::string& scope) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    problems.push_back(scope + "." + key + ": wrong type");
    return fallback;
  }
}

}  // namespace config_detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using config_detail::check_keys;
  using config_detail::get_or;
  std::vector<std::string> problems;
  ExperimentConfig cfg;

  check_keys(j, {"dataset", "model", "optimizer", "lr_schedule", "prune", "train", "output_dir"},
             "config", problems);

  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    check_keys(d,
               {"name", "root", "train_limit", "test_limit", "augment", "norm_mean", "norm_std",
                "synth_train", "synth_test"},
               "dataset", problems);
    cfg.dataset.name = get_or<std::string>(d, "name", cfg.dataset.name, problems, "dataset");
    cfg.dataset.root = get_or<std::string>(d, "root", "", problems, "dataset");
    cfg.dataset.train_limit =
        get_or<std::size_t>(d, "train_limit", 0, problems, "dataset");
    cfg.dataset.test_limit = get_or<std::size_t>(d, "test_limit", 0, problems, "dataset");
    cfg.dataset.synth_train =
        get_or<std::size_t>(d, "synth_train", cfg.dataset.synth_train, problems, "dataset");
    cfg.dataset.synth_test =
        get_or<std::size_t>(d, "synth_test", cfg.dataset.synth_test, problems, "dataset");
    const std::string aug = get_or<std::string>(d, "augment", "none", problems, "dataset");
    if (aug == "none")
      cfg.dataset.augment = AugmentMode::none;
    else if (aug == "flip_crop")
      cfg.dataset.augment = AugmentMode::flip_crop;
    else
      problems.push_back("dataset.augment: must be 'none' or 'flip_crop'");
    cfg.dataset.norm_mean =
        get_or<std::vector<double>>(d, "norm_mean", {}, problems, "dataset");
    cfg.dataset.norm_std = get_or<std::vector<double>>(d, "norm_std", {}, problems, "dataset");
    if (cfg.dataset.norm_mean.size() != cfg.dataset.norm_std.size())
      problems.push_back("dataset.norm_mean/norm_std: lengths differ");
    const std::vector<std::string> names = {"mnist", "cifar10", "synth_digits", "synth_rgb"};
    if (std::find(names.begin(), names.end(), cfg.dataset.name) == names.end())
      problems.push_back("dataset.name: unknown dataset '" + cfg.dataset.name + "'");
  }

  if (j.contains("model")) {
    const auto& m = j.at("model");
    check_keys(m, {"name", "layers"}, "model", problems);
    cfg.model.name = get_or<std::string>(m, "name", cfg.model.name, problems, "model");
    const std::vector<std::string> names = {"lenet_300_100", "small_bn_cnn", "tiny_bn_cnn",
                                            "custom"};
    if (std::find(names.begin(), names.end(), cfg.model.name) == names.end())
      problems.push_back("model.name: unknown model '" + cfg.model.name + "'");
    if (cfg.model.name == "custom") {
      if (!m.contains("layers") || !m.at("layers").is_array() || m.at("layers").empty())
        problems.push_back("model.layers: custom model needs a non-empty layer array");
      else
        cfg.model.custom_layers = m.at("layers");
    }
  }

  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    check_keys(o, {"lr", "momentum", "nesterov", "dampening", "weight_decay"}, "optimizer",
               problems);
    cfg.sgd.learning_rate = get_or<double>(o, "lr", 0.1, problems, "optimizer");
    cfg.sgd.momentum = get_or<double>(o, "momentum", 0.9, problems, "optimizer");
    cfg.sgd.nesterov = get_or<bool>(o, "nesterov", true, problems, "optimizer");
    cfg.sgd.dampening = get_or<double>(o, "dampening", 0.0, problems, "optimizer");
    cfg.sgd.weight_decay = get_or<double>(o, "weight_decay", 1e-4, problems, "optimizer");
    if (!(cfg.sgd.learning_rate > 0.0)) problems.push_back("optimizer.lr: must be > 0");
    if (cfg.sgd.momentum < 0.0 || cfg.sgd.momentum >= 1.0)
      problems.push_back("optimizer.momentum: must be in [0, 1)");
    if (cfg.sgd.weight_decay < 0.0) problems.push_back("optimizer.weight_decay: must be >= 0");
  }

  if (j.contains("lr_schedule")) {
    const auto& l = j.at("lr_schedule");
    check_keys(l, {"kind", "initial", "period", "fractions", "divisor"}, "lr_schedule", problems);
    const std::string kind = get_or<std::string>(l, "kind", "halve_every_n", problems,
                                                 "lr_schedule");
    const double initial =
        get_or<double>(l, "initial", cfg.sgd.learning_rate, problems, "lr_schedule");
    if (kind == "halve_every_n") {
      cfg.lr = LrSchedule::halve_every_n(initial,
                                         get_or<std::size_t>(l, "period", 10, problems,
                                                             "lr_schedule"),
                                         get_or<double>(l, "divisor", 2.0, problems,
                                                        "lr_schedule"));
    } else if (kind == "step_at_fractions") {
      cfg.lr = LrSchedule::step_at_fractions(
          initial, get_or<std::vector<double>>(l, "fractions", {0.5, 0.75}, problems,
                                               "lr_schedule"),
          get_or<double>(l, "divisor", 10.0, problems, "lr_schedule"), 1 /* patched below */);
    } else if (kind == "constant") {
      cfg.lr = LrSchedule::constant(initial);
    } else {
      problems.push_back("lr_schedule.kind: must be halve_every_n, step_at_fractions or constant");
    }
    if (!(initial > 0.0)) problems.push_back("lr_schedule.initial: must be > 0");
  } else {
    cfg.lr = LrSchedule::halve_every_n(cfg.sgd.learning_rate, 10);
  }

  if (j.contains("prune")) {
    const auto& p = j.at("prune");
    check_keys(p,
               {"method", "mode", "keep_ratio", "keep_ratios", "decay_rate", "warmup_epochs",
                "prune_at_epoch", "alpha", "fine_tune_epochs", "fine_tune_lr"},
               "prune", problems);
    const std::string method = get_or<std::string>(p, "method", "none", problems, "prune");
    if (method == "none")
      cfg.prune.method = PruneMethod::none;
    else if (method == "wls")
      cfg.prune.method = PruneMethod::wls;
    else if (method == "cls")
      cfg.prune.method = PruneMethod::cls;
    else
      problems.push_back("prune.method: must be none, wls or cls");
    const std::string mode =
        get_or<std::string>(p, "mode", "iterative_logistic", problems, "prune");
    if (mode == "iterative_logistic")
      cfg.prune.schedule.mode = PruneMode::iterative_logistic;
    else if (mode == "one_shot")
      cfg.prune.schedule.mode = PruneMode::one_shot;
    else
      problems.push_back("prune.mode: must be iterative_logistic or one_shot");
    cfg.prune.schedule.keep_ratio = get_or<double>(p, "keep_ratio", 0.1, problems, "prune");
    if (p.contains("keep_ratios")) {
      if (!p.at("keep_ratios").is_object()) {
        problems.push_back("prune.keep_ratios: must be an object of group -> ratio");
      } else {
        for (auto it = p.at("keep_ratios").begin(); it != p.at("keep_ratios").end(); ++it) {
          if (!it.value().is_number())
            problems.push_back("prune.keep_ratios." + it.key() + ": must be a number");
          else
            cfg.prune.schedule.keep_ratios[it.key()] = it.value().get<double>();
        }
      }
    }
    cfg.prune.schedule.decay_rate = get_or<double>(p, "decay_rate", 4.0, problems, "prune");
    cfg.prune.schedule.warmup_epochs =
        get_or<std::size_t>(p, "warmup_epochs", 5, problems, "prune");
    cfg.prune.schedule.prune_at_epoch =
        get_or<std::size_t>(p, "prune_at_epoch", 0, problems, "prune");
    cfg.prune.ranking.alpha = get_or<double>(p, "alpha", 0.4, problems, "prune");
    cfg.prune.fine_tune_epochs =
        get_or<std::size_t>(p, "fine_tune_epochs", 0, problems, "prune");
    cfg.prune.fine_tune_lr = get_or<double>(p, "fine_tune_lr", 0.001, problems, "prune");
    if (cfg.prune.method != PruneMethod::none) {
      auto ratio_ok = [](double r) { return r > 0.0 && r < 1.0; };
      if (!ratio_ok(cfg.prune.schedule.keep_ratio))
        problems.push_back("prune.keep_ratio: must be in (0, 1)");
      for (const auto& [g, r] : cfg.prune.schedule.keep_ratios)
        if (!ratio_ok(r)) problems.push_back("prune.keep_ratios." + g + ": must be in (0, 1)");
      if (!(cfg.prune.schedule.decay_rate > 0.0))
        problems.push_back("prune.decay_rate: must be > 0");
      if (!(cfg.prune.ranking.alpha > 0.0 && cfg.prune.ranking.alpha <= 1.0))
        problems.push_back("prune.alpha: must be in (0, 1]");
      if (!(cfg.prune.fine_tune_lr > 0.0)) problems.push_back("prune.fine_tune_lr: must be > 0");
    }
  }

  if (j.contains("train")) {
    const auto& t = j.at("train");
    check_keys(t, {"epochs", "batch_size", "eval_batch_size", "seed", "init_seed"}, "train",
               problems);
    cfg.train.epochs = get_or<std::size_t>(t, "epochs", 10, problems, "train");
    cfg.train.batch_size = get_or<std::size_t>(t, "batch_size", 128, problems, "train");
    cfg.train.eval_batch_size =
        get_or<std::size_t>(t, "eval_batch_size", 512, problems, "train");
    cfg.train.seed = get_or<std::uint64_t>(t, "seed", 1, problems, "train");
    cfg.train.init_seed = get_or<std::uint64_t>(t, "init_seed", 0, problems, "train");
    if (cfg.train.epochs == 0) problems.push_back("train.epochs: must be >= 1");
    if (cfg.train.batch_size < 2)
      problems.push_back("train.batch_size: must be >= 2 (batchnorm statistics)");
  }

  cfg.output_dir = config_detail::get_or<std::string>(j, "output_dir", cfg.output_dir, problems,
                                                      "config");

  // total_epochs of schedules follows the training budget
  cfg.prune.schedule.total_epochs = cfg.train.epochs;
  if (cfg.lr.kind == LrSchedule::Kind::step_at_fractions) cfg.lr.total_epochs = cfg.train.epochs;

  if (!problems.empty()) throw ConfigError(problems);
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file: " + path});
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError({std::string("config is not valid JSON: ") + e.what()});
  }
  return parse_config(j);
}

/// Canonical serialization (nlohmann objects iterate keys in sorted order).
inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["dataset"]["name"] = cfg.dataset.name;
  j["dataset"]["root"] = cfg.dataset.root;
  j["dataset"]["train_limit"] = cfg.dataset.train_limit;
  j["dataset"]["test_limit"] = cfg.dataset.test_limit;
  j["dataset"]["augment"] = cfg.dataset.augment == AugmentMode::flip_crop ? "flip_crop" : "none";
  j["dataset"]["synth_train"] = cfg.dataset.synth_train;
  j["dataset"]["synth_test"] = cfg.dataset.synth_test;
  j["model"]["name"] = cfg.model.name;
  if (!cfg.model.custom_layers.is_null()) j["model"]["layers"] = cfg.model.custom_layers;
  j["optimizer"] = {{"lr", cfg.sgd.learning_rate},
                    {"momentum", cfg.sgd.momentum},
                    {"nesterov", cfg.sgd.nesterov},
                    {"dampening", cfg.sgd.dampening},
                    {"weight_decay", cfg.sgd.weight_decay}};
  j["lr_schedule"]["kind"] = cfg.lr.kind == LrSchedule::Kind::halve_every_n
                                 ? (cfg.lr.period == 0 ? "constant" : "halve_every_n")
                                 : "step_at_fractions";
  j["lr_schedule"]["initial"] = cfg.lr.initial_lr;
  j["lr_schedule"]["period"] = cfg.lr.period;
  j["lr_schedule"]["fractions"] = cfg.lr.fractions;
  j["lr_schedule"]["divisor"] = cfg.lr.divisor;
  j["prune"]["method"] = cfg.prune.method == PruneMethod::none
                             ? "none"
                             : (cfg.prune.method == PruneMethod::wls ? "wls" : "cls");
  j["prune"]["mode"] =
      cfg.prune.schedule.mode == PruneMode::one_shot ? "one_shot" : "iterative_logistic";
  j["prune"]["keep_ratio"] = cfg.prune.schedule.keep_ratio;
  j["prune"]["keep_ratios"] = cfg.prune.schedule.keep_ratios;
  j["prune"]["decay_rate"] = cfg.prune.schedule.decay_rate;
  j["prune"]["warmup_epochs"] = cfg.prune.schedule.warmup_epochs;
  j["prune"]["prune_at_epoch"] = cfg.prune.schedule.prune_at_epoch;
  j["prune"]["alpha"] = cfg.prune.ranking.alpha;
  j["prune"]["fine_tune_epochs"] = cfg.prune.fine_tune_epochs;
  j["prune"]["fine_tune_lr"] = cfg.prune.fine_tune_lr;
  j["train"] = {{"epochs", cfg.train.epochs},
                {"batch_size", cfg.train.batch_size},
                {"eval_batch_size", cfg.train.eval_batch_size},
                {"seed", cfg.train.seed},
                {"init_seed", cfg.train.init_seed}};
  j["output_dir"] = cfg.output_dir;
  return j;
}

/// FNV-1a 64 over the canonical serialization; stored in checkpoints so a
/// resume against a different config can be flagged.
inline std::uint64_t config_digest(const ExperimentConfig& cfg) {
  const std::string s = config_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Builds the configured model. Custom layer lists name each layer kind and
/// its dimensions explicitly.
inline Network build_model(const ModelConfig& model, std::uint64_t init_seed,
                           std::size_t in_channels, std::size_t image_side,
                           std::size_t classes) {
  if (model.name == "lenet_300_100") return lenet_300_100(init_seed);
  if (model.name == "small_bn_cnn") return small_bn_cnn(init_seed, in_channels, image_side, classes);
  if (model.name == "tiny_bn_cnn") return tiny_bn_cnn(init_seed, in_channels, image_side, classes);
  if (model.name != "custom") throw ConfigError({"model.name: unknown model '" + model.name + "'"});

  Rng rng(init_seed);
  Network net;
  for (const auto& spec : model.custom_layers) {
    const std::string kind = spec.value("kind", "");
    if (kind == "dense") {
      DenseLayer d(spec.at("in").get<std::size_t>(), spec.at("out").get<std::size_t>());
      d.init_kaiming(rng);
      net.add(std::move(d));
    } else if (kind == "conv2d") {
      Conv2dLayer c(spec.at("in_channels").get<std::size_t>(),
                    spec.at("out_channels").get<std::size_t>(),
                    spec.value("kernel", 3), spec.value("kernel", 3), spec.value("stride", 1),
                    spec.value("padding", 1));
      c.init_kaiming(rng);
      net.add(std::move(c));
    } else if (kind == "batchnorm2d") {
      net.add(BatchNorm2dLayer(spec.at("channels").get<std::size_t>()));
    } else if (kind == "relu") {
      net.add(ReluLayer{});
    } else if (kind == "maxpool2d") {
      net.add(MaxPool2dLayer(spec.value("window", 2), spec.value("stride", 2)));
    } else if (kind == "flatten") {
      net.add(FlattenLayer{});
    } else {
      throw ConfigError({"model.layers: unknown layer kind '" + kind + "'"});
    }
  }
  return net;
}

}  // namespace screenprune
