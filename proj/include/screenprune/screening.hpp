#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "screenprune/layers.hpp"
#include "screenprune/tensor.hpp"

namespace screenprune {

enum class FScoreFlag : std::uint8_t { normal = 0, zero_variance = 1, zero_within_variance = 2 };

/// Per-feature F-statistics plus degeneracy markers.
struct FScores {
  std::vector<double> values;
  std::vector<FScoreFlag> flags;
};

/// Streaming sufficient statistics for per-feature one-way F-scores:
/// sample count N, per-class counts n_c, feature sums S, per-class sums S_c
/// and per-class sums of squares SS_c. Memory is O(classes * features),
/// independent of how many samples flow through.
///
/// All sums accumulate in double; batch splits and batch order change the
/// result only at rounding level.
class ScreeningAccumulator {
public:
  ScreeningAccumulator() = default;

  ScreeningAccumulator(std::size_t class_count, std::size_t feature_count)
      : classes_(class_count), features_(feature_count) {
    if (class_count < 1 || feature_count < 1)
      throw std::invalid_argument("ScreeningAccumulator: counts must be >= 1");
    class_counts_.assign(classes_, 0);
    sum_.assign(features_, 0.0);
    class_sum_.assign(classes_ * features_, 0.0);
    class_sum_sq_.assign(classes_ * features_, 0.0);
  }

  std::size_t class_count() const { return classes_; }
  std::size_t feature_count() const { return features_; }
  std::size_t sample_count() const { return total_; }
  const std::vector<std::size_t>& per_class_counts() const { return class_counts_; }
  const std::vector<double>& sums() const { return sum_; }
  const std::vector<double>& class_sums() const { return class_sum_; }
  const std::vector<double>& class_sum_squares() const { return class_sum_sq_; }

  void reset() {
    total_ = 0;
    std::fill(class_counts_.begin(), class_counts_.end(), 0);
    std::fill(sum_.begin(), sum_.end(), 0.0);
    std::fill(class_sum_.begin(), class_sum_.end(), 0.0);
    std::fill(class_sum_sq_.begin(), class_sum_sq_.end(), 0.0);
  }

  /// Adds a batch of per-sample feature rows.
  void update(const Tensor& features, const std::vector<int>& labels) {
    if (features.size() == 0 && labels.empty()) return;
    if (features.rank() != 2 || features.dim(1) != features_)
      throw std::invalid_argument("ScreeningAccumulator: feature width mismatch");
    const std::size_t k = features.dim(0);
    if (labels.size() != k)
      throw std::invalid_argument("ScreeningAccumulator: label count mismatch");
    for (int y : labels)
      if (y < 0 || static_cast<std::size_t>(y) >= classes_)
        throw std::invalid_argument("ScreeningAccumulator: label out of range");
    for (std::size_t s = 0; s < k; ++s) {
      const int y = labels[s];
      const float* row = features.data() + s * features_;
      double* cs = class_sum_.data() + std::size_t(y) * features_;
      double* cq = class_sum_sq_.data() + std::size_t(y) * features_;
      for (std::size_t j = 0; j < features_; ++j) {
        const double v = row[j];
        cs[j] += v;
        cq[j] += v * v;
        sum_[j] += v;
      }
      ++class_counts_[y];
    }
    total_ += k;
  }

  /// Fused update for dense-layer weight features f(s, o, i) = x[s][i] * w[o][i],
  /// without materializing the k x (out*in) matrix. Feature index is o*in + i.
  /// Equivalent to update(weight_features(layer, x), labels) up to float32
  /// rounding of the products.
  void update_dense_weight_features(const DenseLayer& layer, const Tensor& input,
                                    const std::vector<int>& labels) {
    const std::size_t in = layer.in_features, out = layer.out_features;
    if (features_ != in * out)
      throw std::invalid_argument("ScreeningAccumulator: feature width mismatch");
    if (input.rank() != 2 || input.dim(1) != in)
      throw std::invalid_argument("ScreeningAccumulator: input width mismatch");
    const std::size_t k = input.dim(0);
    if (labels.size() != k)
      throw std::invalid_argument("ScreeningAccumulator: label count mismatch");
    // Per-class input sums: sx[c][i], sxx[c][i].
    std::vector<double> sx(classes_ * in, 0.0), sxx(classes_ * in, 0.0);
    std::vector<std::size_t> batch_counts(classes_, 0);
    for (std::size_t s = 0; s < k; ++s) {
      const int y = labels[s];
      if (y < 0 || static_cast<std::size_t>(y) >= classes_)
        throw std::invalid_argument("ScreeningAccumulator: label out of range");
      const float* row = input.data() + s * in;
      double* cs = sx.data() + std::size_t(y) * in;
      double* cq = sxx.data() + std::size_t(y) * in;
      for (std::size_t i = 0; i < in; ++i) {
        cs[i] += row[i];
        cq[i] += double(row[i]) * double(row[i]);
      }
      ++batch_counts[y];
    }
    std::vector<double> sx_all(in, 0.0);
    for (std::size_t c = 0; c < classes_; ++c)
      for (std::size_t i = 0; i < in; ++i) sx_all[i] += sx[c * in + i];
#pragma omp parallel for schedule(static)
    for (std::int64_t o = 0; o < static_cast<std::int64_t>(out); ++o) {
      const float* w = layer.weights.data() + o * in;
      const std::size_t base = std::size_t(o) * in;
      for (std::size_t c = 0; c < classes_; ++c) {
        if (batch_counts[c] == 0) continue;
        const double* cs = sx.data() + c * in;
        const double* cq = sxx.data() + c * in;
        double* acc_s = class_sum_.data() + c * features_ + base;
        double* acc_q = class_sum_sq_.data() + c * features_ + base;
        for (std::size_t i = 0; i < in; ++i) {
          const double wv = w[i];
          acc_s[i] += wv * cs[i];
          acc_q[i] += wv * wv * cq[i];
        }
      }
      double* acc_sum = sum_.data() + base;
      for (std::size_t i = 0; i < in; ++i) acc_sum[i] += double(w[i]) * sx_all[i];
    }
    for (std::size_t c = 0; c < classes_; ++c) class_counts_[c] += batch_counts[c];
    total_ += k;
  }

  /// Folds another accumulator with identical dimensions into this one.
  /// All fields are order-insensitive sums, so merging per-shard
  /// accumulators matches sequential updates.
  void merge(const ScreeningAccumulator& other) {
    if (other.classes_ != classes_ || other.features_ != features_)
      throw std::invalid_argument("ScreeningAccumulator: merge dimension mismatch");
    total_ += other.total_;
    for (std::size_t c = 0; c < classes_; ++c) class_counts_[c] += other.class_counts_[c];
    for (std::size_t j = 0; j < sum_.size(); ++j) sum_[j] += other.sum_[j];
    for (std::size_t j = 0; j < class_sum_.size(); ++j) {
      class_sum_[j] += other.class_sum_[j];
      class_sum_sq_[j] += other.class_sum_sq_[j];
    }
  }

  /// Computes F = between-class variance / within-class variance per feature.
  ///
  /// Degenerate features: within = between = 0 gives F = 0 (no information);
  /// within = 0 with between > 0 marks a perfectly separating feature and is
  /// assigned the largest finite F in this accumulator (so it min-max
  /// normalizes to the top score).
  FScores finalize() const {
    if (total_ < classes_)
      throw std::invalid_argument("ScreeningAccumulator: need at least C samples (N >= C)");
    std::size_t populated = 0;
    for (std::size_t c = 0; c < classes_; ++c) populated += class_counts_[c] > 0;
    if (populated < 2)
      throw std::invalid_argument("ScreeningAccumulator: need at least two populated classes");
    FScores out;
    out.values.assign(features_, 0.0);
    out.flags.assign(features_, FScoreFlag::normal);
    const double dof_between = double(classes_ - 1);
    const double dof_within = double(total_ - classes_);
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < static_cast<std::int64_t>(features_); ++j) {
      const double grand_mean = sum_[j] / double(total_);
      double between_num = 0.0;
      double within_num = 0.0;
      double ss_total = 0.0;
      double mean_sq_total = 0.0;
      for (std::size_t c = 0; c < classes_; ++c) {
        const std::size_t n_c = class_counts_[c];
        if (n_c == 0) continue;
        const double s_c = class_sum_[c * features_ + j];
        const double ss_c = class_sum_sq_[c * features_ + j];
        const double mean_c = s_c / double(n_c);
        const double d = mean_c - grand_mean;
        between_num += double(n_c) * d * d;
        within_num += ss_c - 2.0 * mean_c * s_c + double(n_c) * mean_c * mean_c;
        ss_total += ss_c;
        mean_sq_total += double(n_c) * mean_c * mean_c;
      }
      // Cancellation guard: sums that should be exactly zero land within
      // rounding of the magnitudes they were formed from.
      const double within_floor = 1e-9 * std::max(ss_total, 1e-300);
      const double between_floor = 1e-9 * std::max(mean_sq_total, 1e-300);
      const bool within_zero = within_num <= within_floor;
      const bool between_zero = between_num <= between_floor;
      if (within_zero && between_zero) {
        out.values[j] = 0.0;
        out.flags[j] = FScoreFlag::zero_variance;
      } else if (within_zero) {
        out.values[j] = 0.0;  // placeholder, capped below
        out.flags[j] = FScoreFlag::zero_within_variance;
      } else {
        out.values[j] = (between_num / dof_between) / (within_num / dof_within);
      }
    }
    double max_finite = 0.0;
    bool any_finite = false;
    for (std::size_t j = 0; j < features_; ++j) {
      if (out.flags[j] == FScoreFlag::normal && out.values[j] > 0.0) {
        max_finite = std::max(max_finite, out.values[j]);
        any_finite = true;
      }
    }
    const double cap = any_finite ? max_finite : 1.0;
    for (std::size_t j = 0; j < features_; ++j)
      if (out.flags[j] == FScoreFlag::zero_within_variance) out.values[j] = cap;
    return out;
  }

private:
  std::size_t classes_ = 0;
  std::size_t features_ = 0;
  std::size_t total_ = 0;                   // N
  std::vector<std::size_t> class_counts_;   // n_c
  std::vector<double> sum_;                 // S,   [p]
  std::vector<double> class_sum_;           // S_c, [C x p]
  std::vector<double> class_sum_sq_;        // SS_c,[C x p]
};

/// Per-weight feature matrix for a dense layer: entry (s, o*in + i) is
/// input[s][i] * weights[o][i], the connection's contribution to unit o's
/// pre-activation. Masked connections give exactly 0.
inline Tensor weight_features(const DenseLayer& layer, const Tensor& layer_input) {
  if (layer_input.rank() != 2 || layer_input.dim(1) != layer.in_features)
    throw std::invalid_argument("weight_features: input shape mismatch");
  const std::size_t k = layer_input.dim(0);
  const std::size_t in = layer.in_features, out = layer.out_features;
  Tensor features({k, out * in});
#pragma omp parallel for schedule(static)
  for (std::int64_t s = 0; s < static_cast<std::int64_t>(k); ++s) {
    const float* x = layer_input.data() + s * in;
    float* row = features.data() + std::size_t(s) * out * in;
    for (std::size_t o = 0; o < out; ++o) {
      const float* w = layer.weights.data() + o * in;
      float* f = row + o * in;
      for (std::size_t i = 0; i < in; ++i) f[i] = x[i] * w[i];
    }
  }
  return features;
}

/// Per-channel feature matrix: entry (s, c) is the spatial mean of the
/// post-batchnorm output map of channel c for sample s.
inline Tensor channel_features(const Tensor& bn_output) {
  if (bn_output.rank() != 4) throw std::invalid_argument("channel_features: input must be 4-d");
  const std::size_t k = bn_output.dim(0), ch = bn_output.dim(1);
  const std::size_t plane = bn_output.dim(2) * bn_output.dim(3);
  Tensor features({k, ch});
  for (std::size_t s = 0; s < k; ++s) {
    for (std::size_t c = 0; c < ch; ++c) {
      const float* p = bn_output.data() + (s * ch + c) * plane;
      double acc = 0.0;
      for (std::size_t i = 0; i < plane; ++i) acc += p[i];
      features[s * ch + c] = static_cast<float>(acc / double(plane));
    }
  }
  return features;
}

/// Writes scores as a two-column text table: feature_index f_score.
inline void dump_f_scores(const FScores& scores, std::ostream& os) {
  for (std::size_t j = 0; j < scores.values.size(); ++j)
    os << j << " " << scores.values[j] << "\n";
}

}  // namespace screenprune
