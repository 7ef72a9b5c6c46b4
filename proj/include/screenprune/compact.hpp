#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "screenprune/network.hpp"

namespace screenprune {

/// Bookkeeping for structural compaction. `dropped_kept_weights` counts
/// weights that were kept by their masks but removed structurally (columns
/// of folded dead units, rows feeding unread units, dense columns of
/// removed channels); everything else removed was already masked to zero.
struct CompactionReport {
  std::size_t removed_units = 0;
  std::size_t removed_channels = 0;
  std::size_t params_before = 0;   // physical prunable params (dense weights + kernel entries)
  std::size_t params_after = 0;
  std::size_t nonzero_before = 0;  // mask-kept prunable params
  std::size_t nonzero_after = 0;
  std::size_t dropped_kept_weights = 0;
  std::size_t folded_units = 0;    // dead units whose constant output was folded downstream
  std::vector<std::string> warnings;
};

namespace detail {

enum class ActBetween { identity, relu, unsupported };

inline DenseLayer select_dense(const DenseLayer& src, const std::vector<std::size_t>& in_keep,
                               const std::vector<std::size_t>& out_keep) {
  DenseLayer out(in_keep.size(), out_keep.size());
  for (std::size_t o = 0; o < out_keep.size(); ++o) {
    out.bias[o] = src.bias[out_keep[o]];
    for (std::size_t i = 0; i < in_keep.size(); ++i) {
      out.weights[o * in_keep.size() + i] =
          src.weights[out_keep[o] * src.in_features + in_keep[i]];
      out.weight_mask[o * in_keep.size() + i] =
          src.weight_mask[out_keep[o] * src.in_features + in_keep[i]];
    }
  }
  return out;
}

inline std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

inline std::size_t kept_in_dense_column(const DenseLayer& l, std::size_t col) {
  std::size_t n = 0;
  for (std::size_t o = 0; o < l.out_features; ++o)
    n += l.weight_mask[o * l.in_features + col] != 0.0f;
  return n;
}

inline std::size_t kept_in_dense_row(const DenseLayer& l, std::size_t row) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < l.in_features; ++i)
    n += l.weight_mask[row * l.in_features + i] != 0.0f;
  return n;
}

inline Conv2dLayer select_conv_channels(const Conv2dLayer& src,
                                        const std::vector<std::size_t>& in_keep,
                                        const std::vector<std::size_t>& out_keep) {
  Conv2dLayer out(in_keep.size(), out_keep.size(), src.kernel_h, src.kernel_w, src.stride,
                  src.padding);
  const std::size_t kk = src.kernel_h * src.kernel_w;
  for (std::size_t oc = 0; oc < out_keep.size(); ++oc) {
    out.bias[oc] = src.bias[out_keep[oc]];
    out.out_channel_mask[oc] = src.out_channel_mask[out_keep[oc]];
    for (std::size_t ic = 0; ic < in_keep.size(); ++ic) {
      out.in_channel_mask[ic] = src.in_channel_mask[in_keep[ic]];
      const float* s =
          src.kernels.data() + (out_keep[oc] * src.in_channels + in_keep[ic]) * kk;
      float* d = out.kernels.data() + (oc * in_keep.size() + ic) * kk;
      std::copy(s, s + kk, d);
    }
  }
  return out;
}

inline BatchNorm2dLayer select_bn_channels(const BatchNorm2dLayer& src,
                                           const std::vector<std::size_t>& keep) {
  BatchNorm2dLayer out(keep.size());
  out.epsilon = src.epsilon;
  out.momentum = src.momentum;
  for (std::size_t c = 0; c < keep.size(); ++c) {
    out.gamma[c] = src.gamma[keep[c]];
    out.beta[c] = src.beta[keep[c]];
    out.running_mean[c] = src.running_mean[keep[c]];
    out.running_var[c] = src.running_var[keep[c]];
    out.channel_mask[c] = src.channel_mask[keep[c]];
  }
  return out;
}

inline std::size_t conv_kept_for_out_channel(const Conv2dLayer& c, std::size_t oc) {
  if (c.out_channel_mask[oc] == 0.0f) return 0;
  std::size_t kept_ic = 0;
  for (std::size_t ic = 0; ic < c.in_channels; ++ic) kept_ic += c.in_channel_mask[ic] != 0.0f;
  return kept_ic * c.kernel_h * c.kernel_w;
}

inline std::size_t conv_kept_for_in_channel(const Conv2dLayer& c, std::size_t ic) {
  if (c.in_channel_mask[ic] == 0.0f) return 0;
  std::size_t kept_oc = 0;
  for (std::size_t oc = 0; oc < c.out_channels; ++oc) kept_oc += c.out_channel_mask[oc] != 0.0f;
  return kept_oc * c.kernel_h * c.kernel_w;
}

}  // namespace detail

/// Structurally removes pruned content: batchnorm channels whose mask is
/// zero (with the producing filter, consuming kernel slices, and dense
/// columns they feed), and dense hidden units with no kept incoming or no
/// kept outgoing weights. A unit that lost all inputs still emits the
/// constant act(bias); that constant is folded into the downstream biases
/// before removal, so eval-mode outputs are preserved.
inline std::pair<Network, CompactionReport> compact(const Network& source) {
  Network net = source;
  net.apply_masks();
  CompactionReport report;
  report.params_before = net.prunable_param_count();
  report.nonzero_before = net.kept_param_count();
  auto& layers = net.layers();

  // ---- channel removal -----------------------------------------------
  for (std::size_t b = 0; b < layers.size(); ++b) {
    auto* bn = std::get_if<BatchNorm2dLayer>(&layers[b]);
    if (!bn) continue;
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < bn->channels; ++c)
      if (bn->channel_mask[c] != 0.0f) keep.push_back(c);
    if (keep.size() == bn->channels) continue;
    if (keep.empty()) {
      report.warnings.push_back("batchnorm layer " + std::to_string(b) +
                                ": every channel masked; layer retained");
      continue;
    }
    // producing conv
    std::size_t producer_idx = layers.size();
    for (std::size_t i = b; i-- > 0;) {
      if (std::holds_alternative<Conv2dLayer>(layers[i])) {
        producer_idx = i;
        break;
      }
      if (!std::holds_alternative<ReluLayer>(layers[i]) &&
          !std::holds_alternative<MaxPool2dLayer>(layers[i]))
        break;
    }
    if (producer_idx == layers.size() ||
        std::get<Conv2dLayer>(layers[producer_idx]).out_channels != bn->channels) {
      report.warnings.push_back("batchnorm layer " + std::to_string(b) +
                                ": no producing conv; channels retained");
      continue;
    }
    // consumer
    std::size_t consumer_idx = layers.size();
    bool consumer_is_dense = false;
    for (std::size_t i = b + 1; i < layers.size(); ++i) {
      if (std::holds_alternative<Conv2dLayer>(layers[i])) {
        consumer_idx = i;
        break;
      }
      if (std::holds_alternative<DenseLayer>(layers[i])) {
        consumer_idx = i;
        consumer_is_dense = true;
        break;
      }
      if (!std::holds_alternative<ReluLayer>(layers[i]) &&
          !std::holds_alternative<MaxPool2dLayer>(layers[i]) &&
          !std::holds_alternative<FlattenLayer>(layers[i]))
        break;
    }
    if (consumer_idx == layers.size()) {
      report.warnings.push_back("batchnorm layer " + std::to_string(b) +
                                ": output feeds the network output; channels retained");
      continue;
    }

    auto& producer = std::get<Conv2dLayer>(layers[producer_idx]);
    std::vector<std::size_t> dropped;
    for (std::size_t c = 0; c < bn->channels; ++c)
      if (bn->channel_mask[c] == 0.0f) dropped.push_back(c);

    if (consumer_is_dense) {
      auto& dense = std::get<DenseLayer>(layers[consumer_idx]);
      if (dense.in_features % bn->channels != 0) {
        report.warnings.push_back("batchnorm layer " + std::to_string(b) +
                                  ": dense consumer width not divisible; channels retained");
        continue;
      }
      const std::size_t spatial = dense.in_features / bn->channels;
      std::vector<std::size_t> col_keep;
      for (std::size_t c : keep)
        for (std::size_t i = 0; i < spatial; ++i) col_keep.push_back(c * spatial + i);
      for (std::size_t c : dropped)
        for (std::size_t i = 0; i < spatial; ++i)
          report.dropped_kept_weights += detail::kept_in_dense_column(dense, c * spatial + i);
      dense = detail::select_dense(dense, col_keep, detail::iota_indices(dense.out_features));
    } else {
      auto& consumer = std::get<Conv2dLayer>(layers[consumer_idx]);
      if (consumer.in_channels != bn->channels) {
        report.warnings.push_back("batchnorm layer " + std::to_string(b) +
                                  ": consumer channel mismatch; channels retained");
        continue;
      }
      for (std::size_t c : dropped)
        report.dropped_kept_weights += detail::conv_kept_for_in_channel(consumer, c);
      consumer = detail::select_conv_channels(consumer, keep,
                                              detail::iota_indices(consumer.out_channels));
    }
    for (std::size_t c : dropped)
      report.dropped_kept_weights += detail::conv_kept_for_out_channel(producer, c);
    producer =
        detail::select_conv_channels(producer, detail::iota_indices(producer.in_channels), keep);
    *bn = detail::select_bn_channels(*bn, keep);
    report.removed_channels += dropped.size();
  }

  // ---- dense dead-unit removal ----------------------------------------
  std::vector<std::size_t> dense_idx;
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (std::holds_alternative<DenseLayer>(layers[i])) dense_idx.push_back(i);

  bool changed = dense_idx.size() >= 2;
  while (changed) {
    changed = false;
    for (std::size_t t = 0; t + 1 < dense_idx.size(); ++t) {
      auto& a = std::get<DenseLayer>(layers[dense_idx[t]]);
      auto& bl = std::get<DenseLayer>(layers[dense_idx[t + 1]]);
      detail::ActBetween act = detail::ActBetween::identity;
      for (std::size_t i = dense_idx[t] + 1; i < dense_idx[t + 1]; ++i) {
        if (std::holds_alternative<ReluLayer>(layers[i]) && act == detail::ActBetween::identity)
          act = detail::ActBetween::relu;
        else
          act = detail::ActBetween::unsupported;
      }
      std::vector<std::size_t> keep;
      bool warned = false;
      for (std::size_t u = 0; u < a.out_features; ++u) {
        bool in_alive = detail::kept_in_dense_row(a, u) > 0;
        bool out_alive = detail::kept_in_dense_column(bl, u) > 0;
        if (!in_alive && out_alive) {
          if (act == detail::ActBetween::unsupported) {
            if (!warned) {
              report.warnings.push_back("dense layer " + std::to_string(dense_idx[t]) +
                                        ": dead unit before an unsupported activation; retained");
              warned = true;
            }
            keep.push_back(u);
            continue;
          }
          const float c = act == detail::ActBetween::relu ? std::max(0.0f, a.bias[u]) : a.bias[u];
          if (c != 0.0f) {
            for (std::size_t o = 0; o < bl.out_features; ++o)
              bl.bias[o] += bl.weights[o * bl.in_features + u] * c;
            ++report.folded_units;
          }
          report.dropped_kept_weights += detail::kept_in_dense_column(bl, u);
          for (std::size_t o = 0; o < bl.out_features; ++o) {
            bl.weights[o * bl.in_features + u] = 0.0f;
            bl.weight_mask[o * bl.in_features + u] = 0.0f;
          }
          out_alive = false;
        } else if (in_alive && !out_alive) {
          report.dropped_kept_weights += detail::kept_in_dense_row(a, u);
          for (std::size_t i = 0; i < a.in_features; ++i) {
            a.weights[u * a.in_features + i] = 0.0f;
            a.weight_mask[u * a.in_features + i] = 0.0f;
          }
          in_alive = false;
        }
        if (in_alive || out_alive) keep.push_back(u);
      }
      if (keep.size() == a.out_features) continue;
      if (keep.empty()) {
        report.warnings.push_back("dense layer " + std::to_string(dense_idx[t]) +
                                  ": every hidden unit dead; layer retained");
        continue;
      }
      report.removed_units += a.out_features - keep.size();
      a = detail::select_dense(a, detail::iota_indices(a.in_features), keep);
      bl = detail::select_dense(bl, keep, detail::iota_indices(bl.out_features));
      changed = true;
    }
  }

  report.params_after = net.prunable_param_count();
  report.nonzero_after = net.kept_param_count();
  return {std::move(net), std::move(report)};
}

}  // namespace screenprune
