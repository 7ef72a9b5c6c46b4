#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "screenprune/network.hpp"

namespace screenprune {

enum class GroupKind { weights, channels };

/// One prunable population: a dense layer's weights, or a set of
/// batchnorm channels (possibly spanning layers for global pruning).
struct PruneGroup {
  std::string group_id;
  GroupKind kind = GroupKind::weights;
  std::size_t layer_index = 0;  // dense layer index for weight groups
  std::vector<std::pair<std::size_t, std::size_t>> channel_members;  // (layer, channel)
  std::vector<std::uint8_t> mask;
  std::vector<double> scores;
  std::vector<double> magnitudes;

  std::size_t member_count() const {
    return kind == GroupKind::weights ? mask.size() : channel_members.size();
  }
  std::size_t kept() const {
    std::size_t n = 0;
    for (auto m : mask) n += m != 0;
    return n;
  }
};

/// Keeps the top `keep` currently-kept members by metric; ties break on
/// larger magnitude, then lower index. Pruned members never come back.
inline std::vector<std::uint8_t> prune_group_mask(const std::vector<std::uint8_t>& mask,
                                                  const std::vector<double>& metric,
                                                  const std::vector<double>& magnitude,
                                                  std::size_t keep) {
  const std::size_t n = mask.size();
  if (metric.size() != n || magnitude.size() != n)
    throw std::invalid_argument("prune_group: vector length mismatch");
  std::vector<std::size_t> kept_idx;
  kept_idx.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (mask[i]) kept_idx.push_back(i);
  if (keep > kept_idx.size())
    throw std::invalid_argument("prune_group: keep exceeds kept count (regrowth unsupported)");
  std::sort(kept_idx.begin(), kept_idx.end(), [&](std::size_t a, std::size_t b) {
    if (metric[a] != metric[b]) return metric[a] > metric[b];
    if (magnitude[a] != magnitude[b]) return magnitude[a] > magnitude[b];
    return a < b;
  });
  std::vector<std::uint8_t> out(n, 0);
  for (std::size_t i = 0; i < keep; ++i) out[kept_idx[i]] = 1;
  return out;
}

inline void prune_group(PruneGroup& group, const std::vector<double>& metric, std::size_t keep) {
  group.mask = prune_group_mask(group.mask, metric, group.magnitudes, keep);
  group.scores = metric;
}

// ---------------------------------------------------------------------------
// Bindings between prune groups and network layers.
// ---------------------------------------------------------------------------

/// One group per dense layer, named fc1, fc2, ... in network order.
inline std::vector<PruneGroup> collect_weight_groups(const Network& net) {
  std::vector<PruneGroup> groups;
  std::size_t ordinal = 0;
  for (std::size_t li = 0; li < net.layer_count(); ++li) {
    const auto* dense = std::get_if<DenseLayer>(&net.layer(li));
    if (!dense) continue;
    PruneGroup g;
    g.group_id = "fc" + std::to_string(++ordinal);
    g.kind = GroupKind::weights;
    g.layer_index = li;
    g.mask.resize(dense->weight_mask.size());
    g.magnitudes.resize(dense->weight_mask.size());
    for (std::size_t i = 0; i < g.mask.size(); ++i) {
      g.mask[i] = dense->weight_mask[i] != 0.0f;
      g.magnitudes[i] = std::abs(double(dense->weights[i]));
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

/// Refreshes magnitude snapshots from the network (weights move every epoch).
inline void refresh_weight_group(PruneGroup& group, const Network& net) {
  const auto& dense = std::get<DenseLayer>(net.layer(group.layer_index));
  for (std::size_t i = 0; i < group.mask.size(); ++i) {
    group.mask[i] = dense.weight_mask[i] != 0.0f;
    group.magnitudes[i] = std::abs(double(dense.weights[i]));
  }
}

inline void store_weight_group(const PruneGroup& group, Network& net) {
  auto& dense = std::get<DenseLayer>(net.layer(group.layer_index));
  for (std::size_t i = 0; i < group.mask.size(); ++i)
    dense.weight_mask[i] = group.mask[i] ? 1.0f : 0.0f;
  dense.apply_mask();
}

/// All batchnorm channels of the network as one global group (one-shot CLS).
inline PruneGroup collect_channel_group_global(const Network& net) {
  PruneGroup g;
  g.group_id = "channels_global";
  g.kind = GroupKind::channels;
  for (std::size_t li = 0; li < net.layer_count(); ++li) {
    const auto* bn = std::get_if<BatchNorm2dLayer>(&net.layer(li));
    if (!bn) continue;
    for (std::size_t c = 0; c < bn->channels; ++c) {
      g.channel_members.emplace_back(li, c);
      g.mask.push_back(bn->channel_mask[c] != 0.0f);
      g.magnitudes.push_back(std::abs(double(bn->gamma[c])));
    }
  }
  if (g.channel_members.empty())
    throw std::invalid_argument("collect_channel_group_global: network has no batchnorm layers");
  return g;
}

/// One channel group per batchnorm layer, named bn1, bn2, ... (iterative CLS).
inline std::vector<PruneGroup> collect_channel_groups_per_layer(const Network& net) {
  std::vector<PruneGroup> groups;
  std::size_t ordinal = 0;
  for (std::size_t li = 0; li < net.layer_count(); ++li) {
    const auto* bn = std::get_if<BatchNorm2dLayer>(&net.layer(li));
    if (!bn) continue;
    PruneGroup g;
    g.group_id = "bn" + std::to_string(++ordinal);
    g.kind = GroupKind::channels;
    for (std::size_t c = 0; c < bn->channels; ++c) {
      g.channel_members.emplace_back(li, c);
      g.mask.push_back(bn->channel_mask[c] != 0.0f);
      g.magnitudes.push_back(std::abs(double(bn->gamma[c])));
    }
    groups.push_back(std::move(g));
  }
  if (groups.empty())
    throw std::invalid_argument("collect_channel_groups_per_layer: network has no batchnorm");
  return groups;
}

inline void refresh_channel_group(PruneGroup& group, const Network& net) {
  for (std::size_t i = 0; i < group.channel_members.size(); ++i) {
    const auto [li, c] = group.channel_members[i];
    const auto& bn = std::get<BatchNorm2dLayer>(net.layer(li));
    group.mask[i] = bn.channel_mask[c] != 0.0f;
    group.magnitudes[i] = std::abs(double(bn.gamma[c]));
  }
}

inline void store_channel_group(const PruneGroup& group, Network& net) {
  for (std::size_t i = 0; i < group.channel_members.size(); ++i) {
    const auto [li, c] = group.channel_members[i];
    auto& bn = std::get<BatchNorm2dLayer>(net.layer(li));
    bn.channel_mask[c] = group.mask[i] ? 1.0f : 0.0f;
  }
}

/// Pushes batchnorm channel masks outward: a masked BN channel zeroes its
/// gamma/beta, the producing conv's filter, and the consuming conv's kernel
/// slices for that channel. Dense consumers need no mask (their inputs from
/// a masked channel are exactly zero); compaction drops those columns.
inline void propagate_channel_masks(Network& net) {
  auto& layers = net.layers();
  for (std::size_t b = 0; b < layers.size(); ++b) {
    auto* bn = std::get_if<BatchNorm2dLayer>(&layers[b]);
    if (!bn) continue;
    // Producing conv: nearest conv behind the BN (activations/pools between
    // are transparent for channel identity).
    Conv2dLayer* producer = nullptr;
    for (std::size_t i = b; i-- > 0;) {
      if (auto* conv = std::get_if<Conv2dLayer>(&layers[i])) {
        producer = conv;
        break;
      }
      if (std::holds_alternative<DenseLayer>(layers[i]) ||
          std::holds_alternative<BatchNorm2dLayer>(layers[i]) ||
          std::holds_alternative<FlattenLayer>(layers[i]))
        break;
    }
    if (!producer || producer->out_channels != bn->channels)
      throw std::invalid_argument("propagate_channel_masks: batchnorm has no producing conv");
    for (std::size_t c = 0; c < bn->channels; ++c)
      if (bn->channel_mask[c] == 0.0f) producer->out_channel_mask[c] = 0.0f;
    // Consuming conv, if any before the next dense/batchnorm.
    for (std::size_t i = b + 1; i < layers.size(); ++i) {
      if (auto* conv = std::get_if<Conv2dLayer>(&layers[i])) {
        if (conv->in_channels != bn->channels)
          throw std::invalid_argument("propagate_channel_masks: channel count mismatch");
        for (std::size_t c = 0; c < bn->channels; ++c)
          if (bn->channel_mask[c] == 0.0f) conv->in_channel_mask[c] = 0.0f;
        break;
      }
      if (std::holds_alternative<DenseLayer>(layers[i]) ||
          std::holds_alternative<BatchNorm2dLayer>(layers[i]))
        break;
    }
  }
  net.apply_masks();
}

/// One line per pruning event, for the structured prune log.
struct PruneEvent {
  std::size_t epoch = 0;
  std::string group_id;
  std::size_t members_before = 0;
  std::size_t members_after = 0;
  double alpha = 0.0;
  std::string mode;
  double keep_ratio = 0.0;
  double decay_rate = 0.0;
  std::size_t total_epochs = 0;
};

}  // namespace screenprune
