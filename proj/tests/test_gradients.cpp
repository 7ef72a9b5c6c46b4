#include <catch2/catch_amalgamated.hpp>

#include "reference_net.hpp"
#include "screenprune/loss.hpp"
#include "screenprune/network.hpp"
#include "screenprune/rng.hpp"

using namespace screenprune;

namespace {

// Central finite differences of the double-precision reference loss with
// respect to every trainable parameter; compared against analytic gradients.
void gradient_check(Network& net, const Tensor& batch, const std::vector<int>& labels,
                    double step = 1e-3, double rel_tol = 1e-3) {
  ForwardCache cache;
  Tensor logits = net.forward(batch, true, &cache);
  LossResult lr = cross_entropy_loss(logits, labels);
  NetGrads grads = net.backward(cache, lr.dlogits);

  std::size_t checked = 0;
  for (std::size_t li = 0; li < net.layer_count(); ++li) {
    auto params = net.param_slots(li);
    for (std::size_t slot = 0; slot < params.size(); ++slot) {
      Tensor& p = *params[slot];
      const Tensor& g = grads.layers[li][slot];
      REQUIRE(g.same_shape(p));
      for (std::size_t i = 0; i < p.size(); ++i) {
        const float orig = p[i];
        p[i] = static_cast<float>(orig + step);
        const double loss_plus = refnet::loss(net, batch, labels);
        p[i] = static_cast<float>(orig - step);
        const double loss_minus = refnet::loss(net, batch, labels);
        p[i] = orig;
        const double fd = (loss_plus - loss_minus) / (2.0 * step);
        const double an = g[i];
        const double denom = std::max({std::abs(fd), std::abs(an), 1e-4});
        INFO("layer " << li << " slot " << slot << " index " << i << " fd=" << fd
                      << " analytic=" << an);
        REQUIRE(std::abs(fd - an) / denom < rel_tol);
        ++checked;
      }
    }
  }
  REQUIRE(checked > 0);
}

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

}  // namespace

TEST_CASE("gradient check: two-layer dense network") {
  Rng rng(11);
  Network net;
  net.add(DenseLayer(4, 5));
  net.add(ReluLayer{});
  net.add(DenseLayer(5, 3));
  std::get<DenseLayer>(net.layer(0)).init_kaiming(rng);
  std::get<DenseLayer>(net.layer(2)).init_kaiming(rng);
  Tensor x = random_tensor({6, 4}, rng);
  std::vector<int> labels = {0, 1, 2, 0, 1, 2};
  gradient_check(net, x, labels);
}

TEST_CASE("gradient check: conv + batchnorm network") {
  Rng rng(12);
  Network net;
  net.add(Conv2dLayer(2, 3, 3, 3, 1, 1));
  net.add(BatchNorm2dLayer(3));
  net.add(ReluLayer{});
  net.add(MaxPool2dLayer(2, 2));
  net.add(FlattenLayer{});
  net.add(DenseLayer(3 * 2 * 2, 2));
  std::get<Conv2dLayer>(net.layer(0)).init_kaiming(rng);
  std::get<DenseLayer>(net.layer(5)).init_kaiming(rng);
  Tensor x = random_tensor({4, 2, 4, 4}, rng);
  std::vector<int> labels = {0, 1, 1, 0};
  gradient_check(net, x, labels);
}

TEST_CASE("gradient check: strided conv without padding") {
  Rng rng(13);
  Network net;
  net.add(Conv2dLayer(1, 2, 3, 3, 2, 0));
  net.add(ReluLayer{});
  net.add(FlattenLayer{});
  net.add(DenseLayer(2 * 2 * 2, 2));
  std::get<Conv2dLayer>(net.layer(0)).init_kaiming(rng);
  std::get<DenseLayer>(net.layer(3)).init_kaiming(rng);
  Tensor x = random_tensor({3, 1, 5, 5}, rng);
  std::vector<int> labels = {1, 0, 1};
  gradient_check(net, x, labels);
}

TEST_CASE("equal two-class logits give +-0.5 bias gradient") {
  Network net;
  net.add(DenseLayer(2, 2));  // zero weights and bias: logits are equal
  Tensor x({1, 2}, {0.3f, -0.4f});
  ForwardCache cache;
  Tensor logits = net.forward(x, true, &cache);
  REQUIRE(logits[0] == logits[1]);

  for (int label : {0, 1}) {
    LossResult lr = cross_entropy_loss(logits, {label});
    NetGrads grads = net.backward(cache, lr.dlogits);
    const Tensor& dbias = grads.layers[0][1];
    REQUIRE(dbias[label] == Catch::Approx(-0.5));
    REQUIRE(dbias[1 - label] == Catch::Approx(0.5));
  }
}

TEST_CASE("masked weight positions receive exactly zero gradient") {
  Rng rng(14);
  Network net;
  net.add(DenseLayer(4, 3));
  auto& dense = std::get<DenseLayer>(net.layer(0));
  dense.init_kaiming(rng);
  dense.weight_mask[2] = 0.0f;
  dense.weight_mask[7] = 0.0f;
  dense.apply_mask();

  Tensor x = random_tensor({5, 4}, rng);
  ForwardCache cache;
  Tensor logits = net.forward(x, true, &cache);
  LossResult lr = cross_entropy_loss(logits, {0, 1, 2, 0, 1});
  NetGrads grads = net.backward(cache, lr.dlogits);
  REQUIRE(grads.layers[0][0][2] == 0.0f);
  REQUIRE(grads.layers[0][0][7] == 0.0f);
  REQUIRE(grads.layers[0][0][0] != 0.0f);
}

TEST_CASE("backward rejects a cache from a different batch size") {
  Network net;
  net.add(DenseLayer(3, 2));
  Tensor x({4, 3});
  ForwardCache cache;
  net.forward(x, true, &cache);
  Tensor bad_dlogits({2, 2});
  REQUIRE_THROWS_AS(net.backward(cache, bad_dlogits), std::invalid_argument);
}
