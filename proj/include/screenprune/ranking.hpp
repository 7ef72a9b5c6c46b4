#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace screenprune {

struct RankingConfig {
  double alpha = 0.4;  // weight on the screening score, in (0, 1]

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0))
      throw std::invalid_argument("RankingConfig: alpha must be in (0, 1]");
  }
};

/// Min-max normalization into [0, 1] within one prune group. A constant
/// group maps to all 0.5 (no member distinguishable from another).
inline std::vector<double> normalize_scores(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("normalize_scores: empty input");
  double lo = values[0], hi = values[0];
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("normalize_scores: non-finite input");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<double> out(values.size());
  if (hi == lo) {
    std::fill(out.begin(), out.end(), 0.5);
    return out;
  }
  const double span = hi - lo;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / span;
  return out;
}

/// Ranking metric for weights: alpha * norm(F) + (1 - alpha) * norm(|w|).
inline std::vector<double> ranking_metric_weights(const std::vector<double>& f_scores,
                                                  const std::vector<double>& magnitudes,
                                                  double alpha) {
  if (f_scores.size() != magnitudes.size())
    throw std::invalid_argument("ranking_metric_weights: length mismatch");
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("ranking_metric_weights: alpha must be in (0, 1]");
  for (double m : magnitudes)
    if (!(m >= 0.0)) throw std::invalid_argument("ranking_metric_weights: magnitudes must be >= 0");
  const std::vector<double> nf = normalize_scores(f_scores);
  const std::vector<double> nm = normalize_scores(magnitudes);
  std::vector<double> metric(nf.size());
  for (std::size_t i = 0; i < metric.size(); ++i)
    metric[i] = alpha * nf[i] + (1.0 - alpha) * nm[i];
  return metric;
}

/// Ranking metric for channels: alpha * norm(F) + (1 - alpha) * norm(|gamma|).
inline std::vector<double> ranking_metric_channels(const std::vector<double>& f_scores,
                                                   const std::vector<double>& gamma_abs,
                                                   double alpha) {
  return ranking_metric_weights(f_scores, gamma_abs, alpha);
}

}  // namespace screenprune
