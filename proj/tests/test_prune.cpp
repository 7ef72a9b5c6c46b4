#include <catch2/catch_amalgamated.hpp>

#include "screenprune/prune.hpp"
#include "screenprune/rng.hpp"

using namespace screenprune;

namespace {

// Brute force over all keep-subsets: maximize total metric, break ties by
// total magnitude, then by lexicographically smallest index set.
std::vector<std::uint8_t> brute_force_select(const std::vector<double>& metric,
                                             const std::vector<double>& magnitude,
                                             std::size_t keep) {
  const std::size_t n = metric.size();
  std::vector<std::uint8_t> best;
  double best_metric = -1e300, best_mag = -1e300;
  std::vector<std::size_t> best_set;
  for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
    if (std::size_t(std::popcount(bits)) != keep) continue;
    double m = 0.0, g = 0.0;
    std::vector<std::size_t> set;
    for (std::size_t i = 0; i < n; ++i)
      if (bits & (1u << i)) {
        m += metric[i];
        g += magnitude[i];
        set.push_back(i);
      }
    const bool better = m > best_metric + 1e-12 ||
                        (std::abs(m - best_metric) <= 1e-12 && g > best_mag + 1e-12) ||
                        (std::abs(m - best_metric) <= 1e-12 && std::abs(g - best_mag) <= 1e-12 &&
                         set < best_set);
    if (better) {
      best_metric = m;
      best_mag = g;
      best_set = set;
      best.assign(n, 0);
      for (auto i : set) best[i] = 1;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("prune_group frozen example with magnitude tie-break") {
  std::vector<std::uint8_t> mask = {1, 1, 1, 1};
  std::vector<double> metric = {0.9, 0.1, 0.5, 0.5};
  std::vector<double> magnitude = {1, 1, 2, 1};
  auto out = prune_group_mask(mask, metric, magnitude, 2);
  REQUIRE(out == std::vector<std::uint8_t>{1, 0, 1, 0});
  REQUIRE(out == brute_force_select(metric, magnitude, 2));
}

TEST_CASE("prune_group agrees with brute force on random instances") {
  Rng rng(61);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng.uniform_index(8);
    std::vector<double> metric(n), magnitude(n);
    for (auto& v : metric) v = double(rng.uniform_index(5)) / 4.0;  // force ties
    for (auto& v : magnitude) v = double(rng.uniform_index(4));
    const std::size_t keep = rng.uniform_index(n + 1);
    std::vector<std::uint8_t> mask(n, 1);
    REQUIRE(prune_group_mask(mask, metric, magnitude, keep) ==
            brute_force_select(metric, magnitude, keep));
  }
}

TEST_CASE("prune_group edge cases") {
  std::vector<std::uint8_t> mask = {1, 0, 1};
  std::vector<double> metric = {0.5, 0.9, 0.1};
  std::vector<double> magnitude = {1, 1, 1};

  SECTION("keep equal to kept count leaves the mask unchanged") {
    REQUIRE(prune_group_mask(mask, metric, magnitude, 2) == mask);
  }
  SECTION("keep 0 empties the mask") {
    REQUIRE(prune_group_mask(mask, metric, magnitude, 0) ==
            std::vector<std::uint8_t>{0, 0, 0});
  }
  SECTION("regrowth is rejected") {
    REQUIRE_THROWS_AS(prune_group_mask(mask, metric, magnitude, 3), std::invalid_argument);
  }
  SECTION("pruned members never return even with top metric") {
    auto out = prune_group_mask(mask, metric, magnitude, 1);
    REQUIRE(out[1] == 0);
    REQUIRE(out[0] == 1);
  }
}

TEST_CASE("selection is invariant to positive scaling of the metric") {
  Rng rng(62);
  std::vector<double> metric(10), magnitude(10);
  for (auto& v : metric) v = rng.uniform(0, 1);
  for (auto& v : magnitude) v = rng.uniform(0, 1);
  std::vector<std::uint8_t> mask(10, 1);
  auto a = prune_group_mask(mask, metric, magnitude, 4);
  std::vector<double> scaled = metric;
  for (auto& v : scaled) v *= 123.0;
  auto b = prune_group_mask(mask, scaled, magnitude, 4);
  REQUIRE(a == b);
}

TEST_CASE("weight groups bind to dense layers") {
  Rng rng(63);
  Network net;
  net.add(DenseLayer(4, 3));
  net.add(ReluLayer{});
  net.add(DenseLayer(3, 2));
  std::get<DenseLayer>(net.layer(0)).init_kaiming(rng);
  std::get<DenseLayer>(net.layer(2)).init_kaiming(rng);

  auto groups = collect_weight_groups(net);
  REQUIRE(groups.size() == 2);
  REQUIRE(groups[0].group_id == "fc1");
  REQUIRE(groups[1].group_id == "fc2");
  REQUIRE(groups[0].member_count() == 12);
  REQUIRE(groups[0].kept() == 12);

  // prune fc1 to 5 kept and push back into the network
  std::vector<double> metric(12);
  for (std::size_t i = 0; i < 12; ++i) metric[i] = groups[0].magnitudes[i];
  prune_group(groups[0], metric, 5);
  store_weight_group(groups[0], net);
  REQUIRE(std::get<DenseLayer>(net.layer(0)).kept_count() == 5);
  // re-collect agrees
  auto again = collect_weight_groups(net);
  REQUIRE(again[0].kept() == 5);
}

TEST_CASE("propagating channel masks matches manual activation zeroing") {
  Rng rng(64);
  Network net;
  net.add(Conv2dLayer(1, 4, 3, 3, 1, 1));
  net.add(BatchNorm2dLayer(4));
  net.add(ReluLayer{});
  net.add(Conv2dLayer(4, 3, 3, 3, 1, 1));
  net.add(BatchNorm2dLayer(3));
  net.add(ReluLayer{});
  net.add(FlattenLayer{});
  net.add(DenseLayer(3 * 6 * 6, 2));
  std::get<Conv2dLayer>(net.layer(0)).init_kaiming(rng);
  std::get<Conv2dLayer>(net.layer(3)).init_kaiming(rng);
  std::get<DenseLayer>(net.layer(7)).init_kaiming(rng);
  // settle running stats so eval mode is meaningful
  for (int i = 0; i < 4; ++i) {
    Tensor warm({4, 1, 6, 6});
    for (std::size_t j = 0; j < warm.size(); ++j) warm[j] = static_cast<float>(rng.uniform(-1, 1));
    net.forward(warm, true);
  }

  Network manual = net;  // reference: zero the channel activations by hand

  auto& bn = std::get<BatchNorm2dLayer>(net.layer(1));
  bn.channel_mask[2] = 0.0f;
  propagate_channel_masks(net);

  // masked channel's filter and downstream slices are zero
  const auto& conv0 = std::get<Conv2dLayer>(net.layer(0));
  REQUIRE(conv0.out_channel_mask[2] == 0.0f);
  const auto& conv1 = std::get<Conv2dLayer>(net.layer(3));
  REQUIRE(conv1.in_channel_mask[2] == 0.0f);

  // manual oracle: zero gamma/beta of channel 2 only; feature going into
  // conv1 is then exactly zero, so outputs must agree
  auto& mbn = std::get<BatchNorm2dLayer>(manual.layer(1));
  mbn.gamma[2] = 0.0f;
  mbn.beta[2] = 0.0f;

  Tensor x({5, 1, 6, 6});
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = static_cast<float>(rng.uniform(-1, 1));
  Tensor ya = net.forward(x, false);
  Tensor yb = manual.forward(x, false);
  for (std::size_t i = 0; i < ya.size(); ++i)
    REQUIRE(double(ya[i]) == Catch::Approx(double(yb[i])).margin(1e-5));
}

TEST_CASE("propagation without masked channels changes nothing") {
  Rng rng(65);
  Network net;
  net.add(Conv2dLayer(2, 3, 3, 3, 1, 1));
  net.add(BatchNorm2dLayer(3));
  std::get<Conv2dLayer>(net.layer(0)).init_kaiming(rng);
  Network before = net;
  propagate_channel_masks(net);
  REQUIRE(std::get<Conv2dLayer>(net.layer(0)).kernels ==
          std::get<Conv2dLayer>(before.layer(0)).kernels);
}

TEST_CASE("masking every channel of a BN leaves downstream conv with bias only") {
  Rng rng(66);
  Network net;
  net.add(Conv2dLayer(1, 2, 3, 3, 1, 1));
  net.add(BatchNorm2dLayer(2));
  net.add(Conv2dLayer(2, 2, 3, 3, 1, 1));
  std::get<Conv2dLayer>(net.layer(0)).init_kaiming(rng);
  auto& conv1 = std::get<Conv2dLayer>(net.layer(2));
  conv1.init_kaiming(rng);
  conv1.bias[0] = 0.7f;
  conv1.bias[1] = -0.2f;
  std::get<BatchNorm2dLayer>(net.layer(1)).channel_mask.fill(0.0f);
  propagate_channel_masks(net);
  Tensor x({2, 1, 5, 5});
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = static_cast<float>(rng.uniform(-1, 1));
  Tensor y = net.forward(x, false);
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t oc = 0; oc < 2; ++oc)
      for (std::size_t i = 0; i < 25; ++i)
        REQUIRE(y[(s * 2 + oc) * 25 + i] == conv1.bias[oc]);
}

TEST_CASE("propagation rejects a BN with no producing conv") {
  Network net;
  net.add(DenseLayer(4, 4));
  net.add(BatchNorm2dLayer(4));
  std::get<BatchNorm2dLayer>(net.layer(1)).channel_mask[0] = 0.0f;
  REQUIRE_THROWS_AS(propagate_channel_masks(net), std::invalid_argument);
}

TEST_CASE("global channel group spans every BN layer") {
  Network net;
  net.add(Conv2dLayer(1, 4, 3, 3, 1, 1));
  net.add(BatchNorm2dLayer(4));
  net.add(Conv2dLayer(4, 6, 3, 3, 1, 1));
  net.add(BatchNorm2dLayer(6));
  auto g = collect_channel_group_global(net);
  REQUIRE(g.member_count() == 10);
  REQUIRE(g.kept() == 10);

  auto per_layer = collect_channel_groups_per_layer(net);
  REQUIRE(per_layer.size() == 2);
  REQUIRE(per_layer[0].group_id == "bn1");
  REQUIRE(per_layer[1].member_count() == 6);

  Network dense_only;
  dense_only.add(DenseLayer(2, 2));
  REQUIRE_THROWS_AS(collect_channel_group_global(dense_only), std::invalid_argument);
}
