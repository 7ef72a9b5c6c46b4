#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "screenprune/checkpoint.hpp"
#include "screenprune/compact.hpp"
#include "screenprune/experiment.hpp"
#include "screenprune/reports.hpp"

using namespace screenprune;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string output_dir;
  std::string data_root;
  std::int64_t seed = -1;
  double alpha = -1.0;
  double ratio = -1.0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config (JSON)")->required();
  cmd->add_option("--output", args.output_dir, "output directory (overrides config)");
  cmd->add_option("--data-root", args.data_root,
                  "dataset root (overrides config and SCREENPRUNE_DATA)");
  cmd->add_option("--seed", args.seed, "training seed (overrides config)");
  cmd->add_option("--alpha", args.alpha, "ranking alpha (overrides config)");
  cmd->add_option("--ratio", args.ratio, "global kept ratio (overrides config)");
}

ExperimentConfig resolve(const CommonArgs& args) {
  ExperimentConfig cfg = load_config(args.config_path);
  if (!args.output_dir.empty()) cfg.output_dir = args.output_dir;
  if (args.seed >= 0) cfg.train.seed = std::uint64_t(args.seed);
  if (args.alpha >= 0.0) cfg.prune.ranking.alpha = args.alpha;
  if (args.ratio >= 0.0) cfg.prune.schedule.keep_ratio = args.ratio;
  return cfg;
}

std::string default_checkpoint(const ExperimentConfig& cfg) {
  return (std::filesystem::path(cfg.output_dir) / "final.ckpt").string();
}

std::vector<double> parse_alpha_list(const std::string& csv) {
  std::vector<double> alphas;
  std::istringstream is(csv);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    if (!tok.empty()) alphas.push_back(std::stod(tok));
  }
  return alphas;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"screenprune: train, prune and report on small networks with "
               "F-statistic screening"};
  app.require_subcommand(1);

  CommonArgs train_args, prune_args, eval_args, report_args, mask_args, compact_args;

  auto* cmd_train = app.add_subcommand("train", "train a model without pruning");
  add_common(cmd_train, train_args);

  auto* cmd_prune = app.add_subcommand("prune", "run the configured WLS/CLS pruning pipeline");
  add_common(cmd_prune, prune_args);

  auto* cmd_eval = app.add_subcommand("evaluate", "evaluate a checkpoint on the test split");
  add_common(cmd_eval, eval_args);
  std::string eval_ckpt;
  cmd_eval->add_option("--checkpoint", eval_ckpt, "checkpoint path (default <output>/final.ckpt)");

  auto* cmd_report = app.add_subcommand("report", "emit tables and plot data from a checkpoint");
  add_common(cmd_report, report_args);
  std::string report_ckpt, alpha_list;
  std::size_t bins = 40;
  cmd_report->add_option("--checkpoint", report_ckpt, "checkpoint path");
  cmd_report->add_option("--bins", bins, "weight histogram bins");
  cmd_report->add_option("--alphas", alpha_list,
                         "comma-separated alphas: run/aggregate the sweep and tabulate");

  auto* cmd_mask = app.add_subcommand("export-mask", "write a dense layer mask as a PGM grid");
  add_common(cmd_mask, mask_args);
  std::string mask_ckpt, mask_out;
  std::size_t mask_layer = 1;
  cmd_mask->add_option("--checkpoint", mask_ckpt, "checkpoint path");
  cmd_mask->add_option("--layer", mask_layer, "dense layer ordinal (1-based)");
  cmd_mask->add_option("--out", mask_out, "output file (default <output>/mask_fc<layer>.pgm)");

  auto* cmd_compact = app.add_subcommand("compact", "structurally shrink a pruned checkpoint");
  add_common(cmd_compact, compact_args);
  std::string compact_ckpt, compact_out;
  cmd_compact->add_option("--checkpoint", compact_ckpt, "checkpoint path");
  cmd_compact->add_option("--out", compact_out,
                          "output checkpoint (default <output>/compact.ckpt)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_train->parsed()) {
      ExperimentConfig cfg = resolve(train_args);
      run_experiment(cfg, resolve_data_root(train_args.data_root, cfg.dataset.root),
                     /*prune_enabled=*/false);
      return 0;
    }

    if (cmd_prune->parsed()) {
      ExperimentConfig cfg = resolve(prune_args);
      if (cfg.prune.method == PruneMethod::none)
        throw ConfigError({"prune.method: config does not enable wls or cls"});
      run_experiment(cfg, resolve_data_root(prune_args.data_root, cfg.dataset.root),
                     /*prune_enabled=*/true);
      return 0;
    }

    if (cmd_eval->parsed()) {
      ExperimentConfig cfg = resolve(eval_args);
      if (eval_ckpt.empty()) eval_ckpt = default_checkpoint(cfg);
      Checkpoint cp = checkpoint_load(eval_ckpt);
      if (cp.config_digest != config_digest(cfg))
        std::cerr << "warning: checkpoint was produced by a different config\n";
      LoadedData data = load_dataset(
          cfg.dataset, resolve_data_root(eval_args.data_root, cfg.dataset.root), cfg.train.seed);
      const double err = evaluate_error_percent(cp.net, data.test, cfg.train.eval_batch_size);
      std::cout << "test error: " << err << "% (" << data.test.size() << " samples, epoch "
                << cp.epoch << ")\n";
      return 0;
    }

    if (cmd_report->parsed()) {
      ExperimentConfig cfg = resolve(report_args);
      namespace fs = std::filesystem;
      fs::create_directories(cfg.output_dir);
      if (!alpha_list.empty()) {
        const auto rows = report_alpha_sweep(
            cfg, parse_alpha_list(alpha_list),
            resolve_data_root(report_args.data_root, cfg.dataset.root));
        std::cout << "alpha   best_error  final_error\n";
        for (const auto& r : rows)
          std::cout << r.alpha << "      " << r.best_error << "%      " << r.final_error << "%\n";
        std::ofstream(fs::path(cfg.output_dir) / "alpha_sweep.csv") << alpha_sweep_to_csv(rows);
        return 0;
      }
      if (report_ckpt.empty()) report_ckpt = default_checkpoint(cfg);
      Checkpoint cp = checkpoint_load(report_ckpt);
      const auto compression = report_layer_compression(cp.net);
      std::cout << to_text(compression);
      std::ofstream(fs::path(cfg.output_dir) / "layer_compression.csv") << to_csv(compression);
      if (cp.net.has_batchnorm()) {
        const auto channels = report_channels_per_layer(cp.net);
        std::cout << "\nlayer  original_channels  remaining\n";
        for (const auto& r : channels)
          std::cout << r.name << "     " << r.original << "  " << r.remaining << "\n";
        std::ofstream(fs::path(cfg.output_dir) / "channels.csv") << channels_to_csv(channels);
      }
      const Histogram hist = report_weight_histogram(cp.net, bins);
      std::ofstream(fs::path(cfg.output_dir) / "weight_histogram.csv") << histogram_to_csv(hist);
      std::cout << "\nreports written to " << cfg.output_dir << "\n";
      return 0;
    }

    if (cmd_mask->parsed()) {
      ExperimentConfig cfg = resolve(mask_args);
      if (mask_ckpt.empty()) mask_ckpt = default_checkpoint(cfg);
      if (mask_out.empty())
        mask_out = (std::filesystem::path(cfg.output_dir) /
                    ("mask_fc" + std::to_string(mask_layer) + ".pgm"))
                       .string();
      Checkpoint cp = checkpoint_load(mask_ckpt);
      std::ofstream out(mask_out);
      if (!out) throw std::runtime_error("cannot write " + mask_out);
      export_mask_pgm(cp.net, mask_layer, out);
      std::cout << "mask written to " << mask_out << "\n";
      return 0;
    }

    if (cmd_compact->parsed()) {
      ExperimentConfig cfg = resolve(compact_args);
      if (compact_ckpt.empty()) compact_ckpt = default_checkpoint(cfg);
      if (compact_out.empty())
        compact_out = (std::filesystem::path(cfg.output_dir) / "compact.ckpt").string();
      Checkpoint cp = checkpoint_load(compact_ckpt);
      auto [compacted, report] = compact(cp.net);
      checkpoint_save(compact_out, compacted, nullptr, cp.epoch, cp.config_digest);
      std::cout << "removed " << report.removed_units << " dense units, "
                << report.removed_channels << " channels\n"
                << "prunable params " << report.params_before << " -> " << report.params_after
                << " (kept nonzero " << report.nonzero_after << ")\n";
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "compacted checkpoint: " << compact_out << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
