#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace screenprune {

enum class PruneMode { one_shot, iterative_logistic };

/// When and how hard to prune: kept ratio(s), logistic decay rate, epoch budget.
struct PruneSchedule {
  PruneMode mode = PruneMode::iterative_logistic;
  double keep_ratio = 0.1;                        // global kept fraction r
  std::map<std::string, double> keep_ratios;      // optional per-group override
  double decay_rate = 4.0;                        // logistic k
  std::size_t total_epochs = 40;                  // E
  std::size_t warmup_epochs = 5;                  // iterative: no pruning while e <= warmup
  std::size_t prune_at_epoch = 0;                 // one_shot: 0 means "after the last epoch"

  double ratio_for(const std::string& group_id) const {
    auto it = keep_ratios.find(group_id);
    return it == keep_ratios.end() ? keep_ratio : it->second;
  }

  void validate() const {
    auto check_r = [](double r) {
      if (!(r > 0.0 && r < 1.0))
        throw std::invalid_argument("PruneSchedule: keep ratio must be in (0, 1)");
    };
    check_r(keep_ratio);
    for (const auto& [_, r] : keep_ratios) check_r(r);
    if (!(decay_rate > 0.0)) throw std::invalid_argument("PruneSchedule: decay_rate must be > 0");
    if (total_epochs == 0) throw std::invalid_argument("PruneSchedule: total_epochs must be >= 1");
  }
};

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Normalized logistic annealing: fraction of the total prune amount applied
/// by epoch e. g(0) = 0, g(E) = 1, g(E/2) = 1/2; slow start, fast middle,
/// slow finish, with sharpness controlled by the decay rate k.
inline double annealing_fraction(std::size_t epoch, std::size_t total_epochs, double decay_rate) {
  const double k = decay_rate;
  const double t = 2.0 * double(epoch) / double(total_epochs) - 1.0;
  return (logistic(k * t) - logistic(-k)) / (logistic(k) - logistic(-k));
}

/// Members still kept at epoch e when annealing from n0 members down to
/// round(n0 * r) at epoch E. Non-increasing in e.
inline std::size_t keep_count(std::size_t epoch, std::size_t total_epochs, double kept_ratio,
                              double decay_rate, std::size_t initial_count) {
  if (epoch > total_epochs) throw std::invalid_argument("keep_count: epoch out of range");
  if (!(kept_ratio > 0.0 && kept_ratio < 1.0))
    throw std::invalid_argument("keep_count: kept_ratio must be in (0, 1)");
  if (total_epochs == 0) throw std::invalid_argument("keep_count: total_epochs must be >= 1");
  const double g = annealing_fraction(epoch, total_epochs, decay_rate);
  const double kept = double(initial_count) * (1.0 - (1.0 - kept_ratio) * g);
  return static_cast<std::size_t>(std::llround(kept));
}

}  // namespace screenprune
