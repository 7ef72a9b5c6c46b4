#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "screenprune/layers.hpp"

namespace screenprune {

/// Per-layer gradient tensors, slot order matching Network::param_slots.
struct NetGrads {
  std::vector<std::vector<Tensor>> layers;
};

/// Activation cache for one forward pass in train mode.
struct ForwardCache {
  std::vector<LayerCache> layers;
  std::size_t batch_size = 0;
};

/// Ordered layer list with value semantics; copying a Network deep-copies
/// all parameters and masks.
class Network {
public:
  Network() = default;
  explicit Network(std::vector<Layer> layers) : layers_(std::move(layers)) {}

  std::size_t layer_count() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return layers_.at(i); }
  const Layer& layer(std::size_t i) const { return layers_.at(i); }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  void add(Layer layer) { layers_.push_back(std::move(layer)); }

  Tensor forward(const Tensor& batch, bool train, ForwardCache* cache = nullptr) {
    Tensor x = batch;
    if (cache) {
      cache->layers.clear();
      cache->layers.reserve(layers_.size());
      cache->batch_size = batch.dim(0);
    }
    for (auto& layer : layers_) {
      x = std::visit(
          [&](auto& l) -> Tensor {
            using L = std::decay_t<decltype(l)>;
            typename L::Cache c;
            Tensor out;
            if constexpr (std::is_same_v<L, BatchNorm2dLayer>) {
              out = l.forward(x, train, cache ? &c : nullptr);
            } else {
              out = l.forward(x, cache ? &c : nullptr);
            }
            if (cache) cache->layers.push_back(std::move(c));
            return out;
          },
          layer);
    }
    return x;
  }

  /// Backpropagates dlogits through the network. Gradients at masked
  /// positions come back exactly zero.
  NetGrads backward(const ForwardCache& cache, const Tensor& dlogits) const {
    check(cache.layers.size() == layers_.size(), "Network: cache does not match network");
    NetGrads grads;
    grads.layers.resize(layers_.size());
    Tensor dy = dlogits;
    for (std::size_t idx = layers_.size(); idx-- > 0;) {
      const Layer& layer = layers_[idx];
      const LayerCache& lc = cache.layers[idx];
      dy = std::visit(
          [&](const auto& l) -> Tensor {
            using L = std::decay_t<decltype(l)>;
            const auto* c = std::get_if<typename L::Cache>(&lc);
            check(c != nullptr, "Network: cache/layer type mismatch");
            if constexpr (std::is_same_v<L, DenseLayer> || std::is_same_v<L, Conv2dLayer>) {
              Tensor d0, d1;
              Tensor dx = l.backward(dy, *c, d0, d1);
              grads.layers[idx] = {std::move(d0), std::move(d1)};
              return dx;
            } else if constexpr (std::is_same_v<L, BatchNorm2dLayer>) {
              Tensor dg, db;
              Tensor dx = l.backward(dy, *c, dg, db);
              grads.layers[idx] = {std::move(dg), std::move(db)};
              return dx;
            } else {
              return l.backward(dy, *c);
            }
          },
          layer);
    }
    return grads;
  }

  /// Pointers to the trainable tensors of layer i, in checkpoint slot order.
  std::vector<Tensor*> param_slots(std::size_t i) {
    return std::visit(
        [](auto& l) -> std::vector<Tensor*> {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, DenseLayer>) {
            return {&l.weights, &l.bias};
          } else if constexpr (std::is_same_v<L, Conv2dLayer>) {
            return {&l.kernels, &l.bias};
          } else if constexpr (std::is_same_v<L, BatchNorm2dLayer>) {
            return {&l.gamma, &l.beta};
          } else {
            return {};
          }
        },
        layers_[i]);
  }

  /// Zeroes every masked parameter; unmasked parameters are untouched.
  void apply_masks() {
    for (auto& layer : layers_) {
      std::visit(
          [](auto& l) {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, DenseLayer> || std::is_same_v<L, Conv2dLayer> ||
                          std::is_same_v<L, BatchNorm2dLayer>) {
              l.apply_mask();
            }
          },
          layer);
    }
  }

  /// Count of prunable parameters (dense weights + conv kernel entries).
  std::size_t prunable_param_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) {
      if (const auto* d = std::get_if<DenseLayer>(&layer)) n += d->prunable_count();
      if (const auto* c = std::get_if<Conv2dLayer>(&layer)) n += c->prunable_count();
    }
    return n;
  }

  std::size_t kept_param_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) {
      if (const auto* d = std::get_if<DenseLayer>(&layer)) n += d->kept_count();
      if (const auto* c = std::get_if<Conv2dLayer>(&layer)) n += c->kept_count();
    }
    return n;
  }

  std::size_t total_channel_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_)
      if (const auto* bn = std::get_if<BatchNorm2dLayer>(&layer)) n += bn->channels;
    return n;
  }

  std::size_t kept_channel_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_)
      if (const auto* bn = std::get_if<BatchNorm2dLayer>(&layer)) n += bn->kept_channels();
    return n;
  }

  bool has_batchnorm() const {
    for (const auto& layer : layers_)
      if (std::holds_alternative<BatchNorm2dLayer>(layer)) return true;
    return false;
  }

private:
  std::vector<Layer> layers_;
};

}  // namespace screenprune
