#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "screenprune/compact.hpp"
#include "screenprune/dataset.hpp"
#include "screenprune/loss.hpp"
#include "screenprune/metrics.hpp"
#include "screenprune/models.hpp"
#include "screenprune/optimizer.hpp"
#include "screenprune/prune.hpp"
#include "screenprune/ranking.hpp"
#include "screenprune/schedule.hpp"
#include "screenprune/screening.hpp"

namespace screenprune {

struct TrainOptions {
  SgdConfig sgd;
  LrSchedule lr;
  std::size_t epochs = 10;
  std::size_t batch_size = 128;
  std::size_t eval_batch_size = 512;
  std::uint64_t seed = 1;
  AugmentMode augment = AugmentMode::none;
};

struct RunResult {
  Network net;
  SgdState velocity;
  double best_error = 100.0;
  std::size_t best_epoch = 0;
  double final_error = 100.0;
  std::size_t epochs_run = 0;
};

/// Top-1 error on the test split, eval-mode forward, in percent.
inline double evaluate_error_percent(Network& net, const Dataset& test,
                                     std::size_t eval_batch = 512) {
  BatchIterator it(test, eval_batch, 0, 0, /*shuffle=*/false);
  std::size_t wrong = 0;
  while (auto batch = it.next()) {
    Tensor logits = net.forward(batch->images, false);
    const std::vector<int> pred = argmax_rows(logits);
    for (std::size_t i = 0; i < pred.size(); ++i) wrong += pred[i] != batch->labels[i];
  }
  return 100.0 * double(wrong) / double(test.size());
}

inline double mean_train_loss(Network& net, const Dataset& train, std::size_t batch_size) {
  BatchIterator it(train, batch_size, 0, 0, /*shuffle=*/false);
  double total = 0.0;
  while (auto batch = it.next()) {
    Tensor logits = net.forward(batch->images, false);
    total += cross_entropy_loss(logits, batch->labels).loss * double(batch->labels.size());
  }
  return total / double(train.size());
}

namespace trainer_detail {

inline std::uint64_t augment_seed(std::uint64_t seed, std::size_t epoch, std::size_t batch_pos) {
  std::uint64_t z = seed ^ (0x9e3779b97f4a7c15ULL * (epoch + 1)) ^ (0xbf58476d1ce4e5b9ULL * (batch_pos + 1));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  return z ^ (z >> 31);
}

}  // namespace trainer_detail

/// One pass over the training set: forward, loss, backward, SGD step, then
/// the per-batch hook (screening statistics read the cache and the freshly
/// updated weights). Returns the sample-weighted mean loss.
inline double run_train_epoch(
    Network& net, const Dataset& train, const TrainOptions& opts, std::size_t epoch, double lr,
    SgdState& velocity,
    const std::function<void(const ForwardCache&, const Batch&)>& after_step = {}) {
  BatchIterator it(train, opts.batch_size, opts.seed, epoch);
  double total_loss = 0.0;
  while (auto batch = it.next()) {
    if (opts.augment != AugmentMode::none)
      batch->images = augment(batch->images, opts.augment,
                              trainer_detail::augment_seed(opts.seed, epoch, batch->first_index));
    ForwardCache cache;
    Tensor logits = net.forward(batch->images, true, &cache);
    LossResult loss = cross_entropy_loss(logits, batch->labels);
    total_loss += loss.loss * double(batch->labels.size());
    NetGrads grads = net.backward(cache, loss.dlogits);
    sgd_step(net, grads, opts.sgd, lr, velocity);
    if (after_step) after_step(cache, *batch);
  }
  return total_loss / double(train.size());
}

/// Masked training with everything else frozen: masks never change, so the
/// sparsity pattern is preserved exactly.
inline RunResult fine_tune(Network net, const Dataset& train, const Dataset& test,
                           std::size_t epochs, const TrainOptions& opts,
                           MetricsWriter* metrics = nullptr, std::size_t epoch_offset = 0,
                           SgdState velocity = {}) {
  RunResult result;
  result.best_error = evaluate_error_percent(net, test, opts.eval_batch_size);
  result.best_epoch = epoch_offset;
  result.final_error = result.best_error;
  for (std::size_t e = 1; e <= epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = lr_at(opts.lr, e - 1);
    const double loss =
        run_train_epoch(net, train, opts, epoch_offset + e, lr, velocity);
    const double err = evaluate_error_percent(net, test, opts.eval_batch_size);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (metrics) {
      const double sparsity =
          1.0 - double(net.kept_param_count()) / double(std::max<std::size_t>(1, net.prunable_param_count()));
      metrics->append({epoch_offset + e, loss, err, sparsity, lr, secs});
    }
    if (err < result.best_error) {
      result.best_error = err;
      result.best_epoch = epoch_offset + e;
    }
    result.final_error = err;
  }
  result.net = std::move(net);
  result.velocity = std::move(velocity);
  result.epochs_run = epochs;
  return result;
}

namespace trainer_detail {

/// Min-max normalization over the kept members only; pruned members get a
/// sentinel below every normalized value so they can never be selected.
inline std::vector<double> masked_metric(const std::vector<std::uint8_t>& mask,
                                         const std::vector<double>& f_scores,
                                         const std::vector<double>& magnitudes, double alpha) {
  std::vector<double> f_kept, m_kept;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    f_kept.push_back(f_scores[i]);
    m_kept.push_back(magnitudes[i]);
  }
  std::vector<double> metric(mask.size(), -1.0);
  if (f_kept.empty()) return metric;
  const std::vector<double> sub = ranking_metric_weights(f_kept, m_kept, alpha);
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) metric[i] = sub[cursor++];
  return metric;
}

}  // namespace trainer_detail

/// Weight-level screening pruning: trains with SGD, accumulates per-weight
/// F-statistics every batch, and prunes each dense layer's weights on the
/// annealing schedule at every epoch end after the warm-up.
inline RunResult wls_train_prune(
    Network net, const Dataset& train, const Dataset& test, const TrainOptions& opts,
    const PruneSchedule& schedule, const RankingConfig& ranking,
    std::size_t fine_tune_epochs = 0, double fine_tune_lr = 0.001,
    MetricsWriter* metrics = nullptr, PruneEventLog* prune_log = nullptr,
    const std::function<void(std::size_t, const std::vector<PruneGroup>&)>& on_prune = {}) {
  schedule.validate();
  ranking.validate();
  opts.sgd.validate();

  std::vector<PruneGroup> groups = collect_weight_groups(net);
  if (groups.empty()) throw std::invalid_argument("wls_train_prune: network has no dense layers");
  std::vector<std::size_t> initial_counts;
  std::vector<ScreeningAccumulator> accs;
  for (const auto& g : groups) {
    initial_counts.push_back(g.member_count());
    accs.emplace_back(train.class_count, g.member_count());
  }

  SgdState velocity;
  RunResult result;
  const std::size_t total = schedule.total_epochs;
  for (std::size_t e = 1; e <= opts.epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    for (auto& acc : accs) acc.reset();
    const double lr = lr_at(opts.lr, e - 1);
    const double loss = run_train_epoch(
        net, train, opts, e, lr, velocity,
        [&](const ForwardCache& cache, const Batch& batch) {
          for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            const auto& dense = std::get<DenseLayer>(net.layer(groups[gi].layer_index));
            const auto& lc = std::get<DenseLayer::Cache>(cache.layers[groups[gi].layer_index]);
            accs[gi].update_dense_weight_features(dense, lc.input, batch.labels);
          }
        });

    const bool prune_now =
        schedule.mode == PruneMode::iterative_logistic
            ? e > schedule.warmup_epochs
            : e == (schedule.prune_at_epoch ? schedule.prune_at_epoch : opts.epochs);
    if (prune_now) {
      for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        PruneGroup& g = groups[gi];
        refresh_weight_group(g, net);
        const double r = schedule.ratio_for(g.group_id);
        const std::size_t keep =
            schedule.mode == PruneMode::iterative_logistic
                ? keep_count(std::min(e, total), total, r, schedule.decay_rate, initial_counts[gi])
                : std::size_t(std::llround(double(initial_counts[gi]) * r));
        const std::size_t before = g.kept();
        if (keep >= before) continue;  // annealing has not caught up with the mask yet
        FScores scores = accs[gi].finalize();
        const std::vector<double> metric =
            trainer_detail::masked_metric(g.mask, scores.values, g.magnitudes, ranking.alpha);
        prune_group(g, metric, keep);
        store_weight_group(g, net);
        if (prune_log)
          prune_log->append({e, g.group_id, before, keep, ranking.alpha,
                             schedule.mode == PruneMode::one_shot ? "one_shot"
                                                                  : "iterative_logistic",
                             r, schedule.decay_rate, total});
      }
      if (on_prune) on_prune(e, groups);
    }

    const double err = evaluate_error_percent(net, test, opts.eval_batch_size);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (metrics) {
      const double sparsity = 1.0 - double(net.kept_param_count()) / double(net.prunable_param_count());
      metrics->append({e, loss, err, sparsity, lr, secs});
    }
    if (err < result.best_error) {
      result.best_error = err;
      result.best_epoch = e;
    }
    result.final_error = err;
  }
  result.epochs_run = opts.epochs;

  if (fine_tune_epochs > 0) {
    TrainOptions ft = opts;
    ft.lr = LrSchedule::constant(fine_tune_lr);
    RunResult ft_result = fine_tune(std::move(net), train, test, fine_tune_epochs, ft, metrics,
                                    opts.epochs, std::move(velocity));
    if (ft_result.best_error < result.best_error) {
      result.best_error = ft_result.best_error;
      result.best_epoch = ft_result.best_epoch;
    }
    result.final_error = ft_result.final_error;
    result.net = std::move(ft_result.net);
    result.velocity = std::move(ft_result.velocity);
    result.epochs_run += fine_tune_epochs;
    return result;
  }
  result.net = std::move(net);
  result.velocity = std::move(velocity);
  return result;
}

/// Channel-level screening pruning over batchnorm channels. One-shot mode
/// ranks every channel in the network against a single global kept ratio,
/// then fine-tunes; iterative mode anneals each batchnorm layer separately.
inline RunResult cls_train_prune(
    Network net, const Dataset& train, const Dataset& test, const TrainOptions& opts,
    const PruneSchedule& schedule, const RankingConfig& ranking,
    std::size_t fine_tune_epochs = 0, double fine_tune_lr = 0.001,
    MetricsWriter* metrics = nullptr, PruneEventLog* prune_log = nullptr,
    const std::function<void(std::size_t, const std::vector<PruneGroup>&)>& on_prune = {}) {
  schedule.validate();
  ranking.validate();
  opts.sgd.validate();
  if (!net.has_batchnorm())
    throw std::invalid_argument("cls_train_prune: network has no batchnorm layers");

  const bool global = schedule.mode == PruneMode::one_shot;
  std::vector<PruneGroup> groups =
      global ? std::vector<PruneGroup>{collect_channel_group_global(net)}
             : collect_channel_groups_per_layer(net);
  std::vector<std::size_t> initial_counts;
  for (const auto& g : groups) initial_counts.push_back(g.member_count());

  // one accumulator per batchnorm layer, keyed by layer index
  std::vector<std::size_t> bn_layers;
  for (std::size_t li = 0; li < net.layer_count(); ++li)
    if (std::holds_alternative<BatchNorm2dLayer>(net.layer(li))) bn_layers.push_back(li);
  std::vector<ScreeningAccumulator> accs;
  for (std::size_t li : bn_layers)
    accs.emplace_back(train.class_count,
                      std::get<BatchNorm2dLayer>(net.layer(li)).channels);

  auto gather_scores = [&](const PruneGroup& g) {
    // finalize each layer's accumulator once, then pick member scores
    std::vector<FScores> per_layer(bn_layers.size());
    std::vector<bool> done(bn_layers.size(), false);
    std::vector<double> scores(g.member_count(), 0.0);
    for (std::size_t i = 0; i < g.channel_members.size(); ++i) {
      const auto [li, c] = g.channel_members[i];
      const std::size_t slot =
          std::find(bn_layers.begin(), bn_layers.end(), li) - bn_layers.begin();
      if (!done[slot]) {
        per_layer[slot] = accs[slot].finalize();
        done[slot] = true;
      }
      scores[i] = per_layer[slot].values[c];
    }
    return scores;
  };

  SgdState velocity;
  RunResult result;
  const std::size_t total = schedule.total_epochs;
  for (std::size_t e = 1; e <= opts.epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    for (auto& acc : accs) acc.reset();
    const double lr = lr_at(opts.lr, e - 1);
    const double loss = run_train_epoch(
        net, train, opts, e, lr, velocity,
        [&](const ForwardCache& cache, const Batch& batch) {
          for (std::size_t slot = 0; slot < bn_layers.size(); ++slot) {
            const auto& bc = std::get<BatchNorm2dLayer::Cache>(cache.layers[bn_layers[slot]]);
            accs[slot].update(channel_features(bc.output), batch.labels);
          }
        });

    const bool prune_now =
        schedule.mode == PruneMode::iterative_logistic
            ? e > schedule.warmup_epochs
            : e == (schedule.prune_at_epoch ? schedule.prune_at_epoch : opts.epochs);
    if (prune_now) {
      for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        PruneGroup& g = groups[gi];
        refresh_channel_group(g, net);
        const double r = global ? schedule.keep_ratio : schedule.ratio_for(g.group_id);
        const std::size_t keep =
            schedule.mode == PruneMode::iterative_logistic
                ? keep_count(std::min(e, total), total, r, schedule.decay_rate, initial_counts[gi])
                : std::size_t(std::llround(double(initial_counts[gi]) * r));
        const std::size_t before = g.kept();
        if (keep >= before) continue;
        const std::vector<double> scores = gather_scores(g);
        const std::vector<double> metric =
            trainer_detail::masked_metric(g.mask, scores, g.magnitudes, ranking.alpha);
        prune_group(g, metric, keep);
        store_channel_group(g, net);
        propagate_channel_masks(net);
        if (prune_log)
          prune_log->append({e, g.group_id, before, keep, ranking.alpha,
                             global ? "one_shot" : "iterative_logistic", r, schedule.decay_rate,
                             total});
      }
      if (on_prune) on_prune(e, groups);
    }

    const double err = evaluate_error_percent(net, test, opts.eval_batch_size);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (metrics) {
      const double sparsity =
          1.0 - double(net.kept_channel_count()) / double(net.total_channel_count());
      metrics->append({e, loss, err, sparsity, lr, secs});
    }
    if (err < result.best_error) {
      result.best_error = err;
      result.best_epoch = e;
    }
    result.final_error = err;
  }
  result.epochs_run = opts.epochs;

  if (fine_tune_epochs > 0) {
    TrainOptions ft = opts;
    ft.lr = LrSchedule::constant(fine_tune_lr);
    RunResult ft_result = fine_tune(std::move(net), train, test, fine_tune_epochs, ft, metrics,
                                    opts.epochs, std::move(velocity));
    if (ft_result.best_error < result.best_error) {
      result.best_error = ft_result.best_error;
      result.best_epoch = ft_result.best_epoch;
    }
    result.final_error = ft_result.final_error;
    result.net = std::move(ft_result.net);
    result.velocity = std::move(ft_result.velocity);
    result.epochs_run += fine_tune_epochs;
    return result;
  }
  result.net = std::move(net);
  result.velocity = std::move(velocity);
  return result;
}

/// Plain training, no pruning: the same loop with the hooks disabled.
inline RunResult train_network(Network net, const Dataset& train, const Dataset& test,
                               const TrainOptions& opts, MetricsWriter* metrics = nullptr) {
  opts.sgd.validate();
  SgdState velocity;
  RunResult result;
  for (std::size_t e = 1; e <= opts.epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = lr_at(opts.lr, e - 1);
    const double loss = run_train_epoch(net, train, opts, e, lr, velocity);
    const double err = evaluate_error_percent(net, test, opts.eval_batch_size);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (metrics) metrics->append({e, loss, err, 0.0, lr, secs});
    if (err < result.best_error) {
      result.best_error = err;
      result.best_epoch = e;
    }
    result.final_error = err;
  }
  result.net = std::move(net);
  result.velocity = std::move(velocity);
  result.epochs_run = opts.epochs;
  return result;
}

}  // namespace screenprune
