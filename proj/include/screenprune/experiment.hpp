#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "screenprune/checkpoint.hpp"
#include "screenprune/config.hpp"
#include "screenprune/datagen.hpp"
#include "screenprune/reports.hpp"
#include "screenprune/trainer.hpp"

namespace screenprune {

/// Dataset root precedence: CLI flag, config value, SCREENPRUNE_DATA, ./data.
inline std::string resolve_data_root(const std::string& cli_root, const std::string& config_root) {
  if (!cli_root.empty()) return cli_root;
  if (!config_root.empty()) return config_root;
  if (const char* env = std::getenv("SCREENPRUNE_DATA")) {
    if (*env) return env;
  }
  return "data";
}

namespace exp_detail {

inline std::string first_existing(const std::vector<std::string>& candidates) {
  for (const auto& c : candidates)
    if (std::filesystem::exists(c)) return c;
  return candidates.front();  // loader will report the missing file
}

}  // namespace exp_detail

struct LoadedData {
  Dataset train;
  Dataset test;
};

/// Loads the configured dataset from the resolved root. Synthetic datasets
/// are generated into <root> on first use and then read back through the
/// same file loaders as the real ones.
inline LoadedData load_dataset(const DatasetConfig& cfg, const std::string& root,
                               std::uint64_t seed) {
  namespace fs = std::filesystem;
  LoadedData data;
  if (cfg.name == "mnist" || cfg.name == "synth_digits") {
    std::string dir = root;
    if (cfg.name == "synth_digits") {
      dir = (fs::path(root) / ("synth-digits-" + std::to_string(seed) + "-" +
                               std::to_string(cfg.synth_train) + "x" +
                               std::to_string(cfg.synth_test)))
                .string();
      if (!fs::exists(fs::path(dir) / "train-images-idx3-ubyte")) {
        fs::create_directories(dir);
        write_synth_digit_dataset(dir, cfg.synth_train, cfg.synth_test, seed);
      }
    }
    Normalization norm = Normalization::mnist();
    if (!cfg.norm_mean.empty()) norm = {cfg.norm_mean, cfg.norm_std};
    auto p = [&](const std::string& name) {
      return exp_detail::first_existing({(fs::path(dir) / name).string(),
                                         (fs::path(dir) / (name + ".gz")).string(),
                                         (fs::path(dir) / "MNIST" / "raw" / name).string()});
    };
    data.train = load_mnist_idx(p("train-images-idx3-ubyte"), p("train-labels-idx1-ubyte"), norm);
    data.test = load_mnist_idx(p("t10k-images-idx3-ubyte"), p("t10k-labels-idx1-ubyte"), norm);
  } else if (cfg.name == "cifar10" || cfg.name == "synth_rgb") {
    Normalization norm = Normalization::cifar10();
    if (!cfg.norm_mean.empty()) norm = {cfg.norm_mean, cfg.norm_std};
    if (cfg.name == "synth_rgb") {
      const std::string dir =
          (fs::path(root) / ("synth-rgb-" + std::to_string(seed) + "-" +
                             std::to_string(cfg.synth_train) + "x" + std::to_string(cfg.synth_test)))
              .string();
      if (!fs::exists(fs::path(dir) / "data_batch_1.bin")) {
        fs::create_directories(dir);
        write_synth_rgb_dataset(dir, cfg.synth_train, cfg.synth_test, seed);
      }
      data.train = load_cifar10({(fs::path(dir) / "data_batch_1.bin").string()}, norm);
      data.test = load_cifar10({(fs::path(dir) / "test_batch.bin").string()}, norm);
    } else {
      const std::string base = fs::exists(fs::path(root) / "cifar-10-batches-bin")
                                   ? (fs::path(root) / "cifar-10-batches-bin").string()
                                   : root;
      std::vector<std::string> train_files;
      for (int b = 1; b <= 5; ++b)
        train_files.push_back((fs::path(base) / ("data_batch_" + std::to_string(b) + ".bin")).string());
      data.train = load_cifar10(train_files, norm);
      data.test = load_cifar10({(fs::path(base) / "test_batch.bin").string()}, norm);
    }
  } else {
    throw ConfigError({"dataset.name: unknown dataset '" + cfg.name + "'"});
  }
  data.train.split = "train";
  data.test.split = "test";
  if (cfg.train_limit) data.train = subset(data.train, cfg.train_limit);
  if (cfg.test_limit) data.test = subset(data.test, cfg.test_limit);
  return data;
}

inline TrainOptions train_options_from(const ExperimentConfig& cfg) {
  TrainOptions opts;
  opts.sgd = cfg.sgd;
  opts.lr = cfg.lr;
  opts.epochs = cfg.train.epochs;
  opts.batch_size = cfg.train.batch_size;
  opts.eval_batch_size = cfg.train.eval_batch_size;
  opts.seed = cfg.train.seed;
  opts.augment = cfg.dataset.augment;
  return opts;
}

struct ExperimentResult {
  RunResult run;
  std::string checkpoint_path;
  std::string metrics_path;
  std::string prune_log_path;
};

/// Runs the configured pipeline (train or prune) end to end and writes
/// metrics, prune events, the resolved config, and the final checkpoint
/// under the output directory.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& data_root,
                                       bool prune_enabled, std::ostream& log = std::cout) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  LoadedData data = load_dataset(cfg.dataset, data_root, cfg.train.seed);
  Network net = build_model(cfg.model, cfg.effective_init_seed(), data.train.channels(),
                            data.train.height(), data.train.class_count);

  {
    std::ofstream cfg_out(fs::path(cfg.output_dir) / "config.json");
    cfg_out << config_to_json(cfg).dump(2) << "\n";
  }

  ExperimentResult result;
  result.metrics_path = (fs::path(cfg.output_dir) / "metrics.csv").string();
  result.checkpoint_path = (fs::path(cfg.output_dir) / "final.ckpt").string();
  MetricsWriter metrics(result.metrics_path);
  TrainOptions opts = train_options_from(cfg);

  if (!prune_enabled || cfg.prune.method == PruneMethod::none) {
    log << "training " << cfg.model.name << " on " << cfg.dataset.name << " for "
        << cfg.train.epochs << " epochs\n";
    result.run = train_network(std::move(net), data.train, data.test, opts, &metrics);
  } else {
    result.prune_log_path = (fs::path(cfg.output_dir) / "prune_events.jsonl").string();
    PruneEventLog prune_log(result.prune_log_path);
    if (cfg.prune.method == PruneMethod::wls) {
      log << "WLS pruning " << cfg.model.name << " on " << cfg.dataset.name << ", alpha "
          << cfg.prune.ranking.alpha << "\n";
      result.run = wls_train_prune(std::move(net), data.train, data.test, opts,
                                   cfg.prune.schedule, cfg.prune.ranking,
                                   cfg.prune.fine_tune_epochs, cfg.prune.fine_tune_lr, &metrics,
                                   &prune_log);
    } else {
      log << "CLS pruning " << cfg.model.name << " on " << cfg.dataset.name << ", alpha "
          << cfg.prune.ranking.alpha << "\n";
      result.run = cls_train_prune(std::move(net), data.train, data.test, opts,
                                   cfg.prune.schedule, cfg.prune.ranking,
                                   cfg.prune.fine_tune_epochs, cfg.prune.fine_tune_lr, &metrics,
                                   &prune_log);
    }
  }

  checkpoint_save(result.checkpoint_path, result.run.net, &result.run.velocity,
                  std::uint32_t(result.run.epochs_run), config_digest(cfg));
  log << "best error " << result.run.best_error << "% (epoch " << result.run.best_epoch
      << "), final error " << result.run.final_error << "%\n";
  log << "checkpoint: " << result.checkpoint_path << "\n";
  return result;
}

struct AlphaSweepRow {
  double alpha = 0.0;
  double best_error = 0.0;
  double final_error = 0.0;
};

/// Runs (or aggregates previously completed runs of) the configured prune
/// experiment per alpha; one row per alpha.
inline std::vector<AlphaSweepRow> report_alpha_sweep(const ExperimentConfig& base,
                                                     const std::vector<double>& alphas,
                                                     const std::string& data_root,
                                                     std::ostream& log = std::cout) {
  namespace fs = std::filesystem;
  std::vector<AlphaSweepRow> rows;
  for (double alpha : alphas) {
    ExperimentConfig cfg = base;
    cfg.prune.ranking.alpha = alpha;
    std::ostringstream tag;
    tag << "alpha_" << alpha;
    cfg.output_dir = (fs::path(base.output_dir) / tag.str()).string();
    const std::string metrics_path = (fs::path(cfg.output_dir) / "metrics.csv").string();
    const std::size_t expected_rows = cfg.train.epochs + cfg.prune.fine_tune_epochs;
    bool reuse = false;
    if (fs::exists(metrics_path)) {
      try {
        reuse = parse_metrics_csv(metrics_path).size() == expected_rows;
      } catch (const std::exception&) {
        reuse = false;
      }
    }
    if (!reuse) run_experiment(cfg, data_root, /*prune_enabled=*/true, log);
    const auto metrics = parse_metrics_csv(metrics_path);
    AlphaSweepRow row;
    row.alpha = alpha;
    row.best_error = 100.0;
    for (const auto& m : metrics) row.best_error = std::min(row.best_error, m.test_error_percent);
    row.final_error = metrics.back().test_error_percent;
    rows.push_back(row);
  }
  return rows;
}

inline std::string alpha_sweep_to_csv(const std::vector<AlphaSweepRow>& rows) {
  std::ostringstream os;
  os << "alpha,best_error,final_error\n";
  for (const auto& r : rows) os << r.alpha << ',' << r.best_error << ',' << r.final_error << "\n";
  return os.str();
}

}  // namespace screenprune
