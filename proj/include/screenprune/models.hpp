#pragma once

#include <cstdint>

#include "screenprune/network.hpp"
#include "screenprune/rng.hpp"

namespace screenprune {

/// Classic 784-300-100-10 fully connected classifier with ReLU activations.
inline Network lenet_300_100(std::uint64_t init_seed) {
  Rng rng(init_seed);
  Network net;
  net.add(FlattenLayer{});
  net.add(DenseLayer(784, 300));
  net.add(ReluLayer{});
  net.add(DenseLayer(300, 100));
  net.add(ReluLayer{});
  net.add(DenseLayer(100, 10));
  for (std::size_t li : {1u, 3u, 5u}) std::get<DenseLayer>(net.layer(li)).init_kaiming(rng);
  return net;
}

/// Four conv+BN+ReLU blocks (32/64/128/128 channels), two pooling stages,
/// one dense classifier. Sized so channel pruning has room to bite while a
/// CPU can still train it.
inline Network small_bn_cnn(std::uint64_t init_seed, std::size_t in_channels = 3,
                            std::size_t image_side = 32, std::size_t classes = 10) {
  Rng rng(init_seed);
  Network net;
  net.add(Conv2dLayer(in_channels, 32, 3, 3, 1, 1));
  net.add(BatchNorm2dLayer(32));
  net.add(ReluLayer{});
  net.add(Conv2dLayer(32, 64, 3, 3, 1, 1));
  net.add(BatchNorm2dLayer(64));
  net.add(ReluLayer{});
  net.add(MaxPool2dLayer(2, 2));
  net.add(Conv2dLayer(64, 128, 3, 3, 1, 1));
  net.add(BatchNorm2dLayer(128));
  net.add(ReluLayer{});
  net.add(MaxPool2dLayer(2, 2));
  net.add(Conv2dLayer(128, 128, 3, 3, 1, 1));
  net.add(BatchNorm2dLayer(128));
  net.add(ReluLayer{});
  net.add(FlattenLayer{});
  const std::size_t spatial = image_side / 4;
  net.add(DenseLayer(128 * spatial * spatial, classes));
  for (auto& layer : net.layers()) {
    if (auto* conv = std::get_if<Conv2dLayer>(&layer)) conv->init_kaiming(rng);
    if (auto* dense = std::get_if<DenseLayer>(&layer)) dense->init_kaiming(rng);
  }
  return net;
}

/// Reduced variant of small_bn_cnn (16/32/64/64) for quick rehearsals.
inline Network tiny_bn_cnn(std::uint64_t init_seed, std::size_t in_channels = 3,
                           std::size_t image_side = 32, std::size_t classes = 10) {
  Rng rng(init_seed);
  Network net;
  net.add(Conv2dLayer(in_channels, 16, 3, 3, 1, 1));
  net.add(BatchNorm2dLayer(16));
  net.add(ReluLayer{});
  net.add(MaxPool2dLayer(2, 2));
  net.add(Conv2dLayer(16, 32, 3, 3, 1, 1));
  net.add(BatchNorm2dLayer(32));
  net.add(ReluLayer{});
  net.add(MaxPool2dLayer(2, 2));
  net.add(Conv2dLayer(32, 64, 3, 3, 1, 1));
  net.add(BatchNorm2dLayer(64));
  net.add(ReluLayer{});
  net.add(MaxPool2dLayer(2, 2));
  net.add(FlattenLayer{});
  const std::size_t spatial = image_side / 8;
  net.add(DenseLayer(64 * spatial * spatial, classes));
  for (auto& layer : net.layers()) {
    if (auto* conv = std::get_if<Conv2dLayer>(&layer)) conv->init_kaiming(rng);
    if (auto* dense = std::get_if<DenseLayer>(&layer)) dense->init_kaiming(rng);
  }
  return net;
}

}  // namespace screenprune
