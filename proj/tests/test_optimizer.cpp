#include <catch2/catch_amalgamated.hpp>

#include "screenprune/loss.hpp"
#include "screenprune/optimizer.hpp"
#include "screenprune/rng.hpp"

using namespace screenprune;

namespace {

Network one_weight_net(float w0) {
  Network net;
  net.add(DenseLayer(1, 1));
  std::get<DenseLayer>(net.layer(0)).weights[0] = w0;
  return net;
}

NetGrads grads_for(const Network& net, float wgrad, float bgrad) {
  NetGrads g;
  g.layers.resize(net.layer_count());
  g.layers[0] = {Tensor({1, 1}, {wgrad}), Tensor({1}, {bgrad})};
  return g;
}

}  // namespace

TEST_CASE("vanilla sgd step") {
  Network net = one_weight_net(1.0f);
  SgdConfig cfg{0.1, 0.0, false, 0.0, 0.0};
  SgdState state;
  sgd_step(net, grads_for(net, 1.0f, 0.0f), cfg, 0.1, state);
  REQUIRE(std::get<DenseLayer>(net.layer(0)).weights[0] == Catch::Approx(0.9f));
}

TEST_CASE("nesterov steps match a scalar reference sequence") {
  // Hand-rolled reference of the same rule: g' = g + wd*w; v = mu*v + g';
  // step = g' + mu*v; w -= lr*step.
  const double mu = 0.9, lr = 0.1, g = 1.0;
  double w_ref = 0.0, v_ref = 0.0;
  Network net = one_weight_net(0.0f);
  SgdConfig cfg{lr, mu, true, 0.0, 0.0};
  SgdState state;
  for (int i = 0; i < 5; ++i) {
    v_ref = mu * v_ref + g;
    w_ref -= lr * (g + mu * v_ref);
    sgd_step(net, grads_for(net, float(g), 0.0f), cfg, lr, state);
    REQUIRE(double(std::get<DenseLayer>(net.layer(0)).weights[0]) ==
            Catch::Approx(w_ref).epsilon(1e-6));
  }
  // Frozen first two values of that sequence.
  Network net2 = one_weight_net(0.0f);
  SgdState state2;
  sgd_step(net2, grads_for(net2, 1.0f, 0.0f), cfg, lr, state2);
  REQUIRE(double(std::get<DenseLayer>(net2.layer(0)).weights[0]) == Catch::Approx(-0.19));
  sgd_step(net2, grads_for(net2, 1.0f, 0.0f), cfg, lr, state2);
  REQUIRE(double(std::get<DenseLayer>(net2.layer(0)).weights[0]) == Catch::Approx(-0.461));
}

TEST_CASE("weight decay applies before momentum") {
  Network net = one_weight_net(2.0f);
  SgdConfig cfg{0.1, 0.0, false, 0.0, 0.5};
  SgdState state;
  sgd_step(net, grads_for(net, 0.0f, 0.0f), cfg, 0.1, state);
  // g' = 0 + 0.5*2 = 1; w = 2 - 0.1*1 = 1.9
  REQUIRE(std::get<DenseLayer>(net.layer(0)).weights[0] == Catch::Approx(1.9f));
}

TEST_CASE("masked weights stay exactly zero across many steps") {
  Rng rng(21);
  Network net;
  net.add(DenseLayer(3, 2));
  auto& dense = std::get<DenseLayer>(net.layer(0));
  dense.init_kaiming(rng);
  dense.weight_mask[1] = 0.0f;
  dense.weight_mask[4] = 0.0f;
  dense.apply_mask();
  SgdConfig cfg{0.05, 0.9, true, 0.0, 1e-4};
  SgdState state;
  Tensor x({4, 3});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(rng.uniform(-1, 1));
  for (int step = 0; step < 20; ++step) {
    ForwardCache cache;
    Tensor logits = net.forward(x, true, &cache);
    LossResult lr = cross_entropy_loss(logits, {0, 1, 0, 1});
    NetGrads grads = net.backward(cache, lr.dlogits);
    sgd_step(net, grads, cfg, 0.05, state);
    REQUIRE(dense.weights[1] == 0.0f);
    REQUIRE(dense.weights[4] == 0.0f);
    REQUIRE(dense.weights[0] != 0.0f);
  }
}

TEST_CASE("lr schedule: halve every 10 epochs") {
  LrSchedule s = LrSchedule::halve_every_n(0.1, 10);
  for (std::size_t e = 0; e < 10; ++e) REQUIRE(lr_at(s, e) == Catch::Approx(0.1));
  REQUIRE(lr_at(s, 10) == Catch::Approx(0.05));
  REQUIRE(lr_at(s, 25) == Catch::Approx(0.025));
}

TEST_CASE("lr schedule: divide by 10 at 50% and 75% of 160 epochs") {
  LrSchedule s = LrSchedule::step_at_fractions(0.1, {0.5, 0.75}, 10.0, 160);
  REQUIRE(lr_at(s, 0) == Catch::Approx(0.1));
  REQUIRE(lr_at(s, 79) == Catch::Approx(0.1));
  REQUIRE(lr_at(s, 80) == Catch::Approx(0.01));
  REQUIRE(lr_at(s, 120) == Catch::Approx(0.001));
  REQUIRE(lr_at(s, 159) == Catch::Approx(0.001));
}

TEST_CASE("lr schedules never increase") {
  for (const LrSchedule& s : {LrSchedule::halve_every_n(0.3, 7, 3.0),
                              LrSchedule::step_at_fractions(0.2, {0.25, 0.5, 0.9}, 5.0, 40),
                              LrSchedule::constant(0.01)}) {
    double prev = lr_at(s, 0);
    REQUIRE(prev > 0.0);
    for (std::size_t e = 1; e < 50; ++e) {
      const double cur = lr_at(s, e);
      REQUIRE(cur > 0.0);
      REQUIRE(cur <= prev);
      prev = cur;
    }
  }
}

TEST_CASE("sgd config validation") {
  SgdConfig bad1{0.0, 0.9, true, 0.0, 1e-4};
  REQUIRE_THROWS_AS(bad1.validate(), std::invalid_argument);
  SgdConfig bad2{0.1, 1.0, true, 0.0, 1e-4};
  REQUIRE_THROWS_AS(bad2.validate(), std::invalid_argument);
  SgdConfig good{0.1, 0.9, true, 0.0, 1e-4};
  REQUIRE_NOTHROW(good.validate());
}
