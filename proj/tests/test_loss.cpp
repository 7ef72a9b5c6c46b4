#include <catch2/catch_amalgamated.hpp>

#include "screenprune/loss.hpp"

using namespace screenprune;

TEST_CASE("uniform logits over 10 classes cost ln(10)") {
  Tensor logits({1, 10});
  LossResult r = cross_entropy_loss(logits, {3});
  REQUIRE(r.loss == Catch::Approx(std::log(10.0)).epsilon(1e-9));
}

TEST_CASE("saturated correct logit costs nearly nothing") {
  Tensor logits({1, 4});
  logits[2] = 100.0f;
  LossResult r = cross_entropy_loss(logits, {2});
  REQUIRE(r.loss < 1e-6);
  REQUIRE(r.dlogits.all_finite());
}

TEST_CASE("two-class example evaluates the formula directly") {
  Tensor logits({1, 2}, {1.0f, 0.0f});
  LossResult r = cross_entropy_loss(logits, {0});
  REQUIRE(r.loss == Catch::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-7));
  // dlogits = (softmax - onehot) / k
  const double p0 = 1.0 / (1.0 + std::exp(-1.0));
  REQUIRE(double(r.dlogits[0]) == Catch::Approx(p0 - 1.0).epsilon(1e-5));
  REQUIRE(double(r.dlogits[1]) == Catch::Approx(1.0 - p0).epsilon(1e-5));
}

TEST_CASE("loss averages over the batch") {
  Tensor logits({2, 2}, {1.0f, 0.0f, 1.0f, 0.0f});
  const double single = cross_entropy_loss(Tensor({1, 2}, {1.0f, 0.0f}), {0}).loss;
  LossResult r = cross_entropy_loss(logits, {0, 0});
  REQUIRE(r.loss == Catch::Approx(single).epsilon(1e-9));
  REQUIRE(double(r.dlogits[0]) == Catch::Approx((1.0 / (1.0 + std::exp(-1.0)) - 1.0) / 2.0));
}

TEST_CASE("labels out of range are rejected") {
  Tensor logits({1, 3});
  REQUIRE_THROWS_AS(cross_entropy_loss(logits, {3}), std::invalid_argument);
  REQUIRE_THROWS_AS(cross_entropy_loss(logits, {-1}), std::invalid_argument);
  REQUIRE_THROWS_AS(cross_entropy_loss(logits, {0, 1}), std::invalid_argument);
}
