#include <catch2/catch_amalgamated.hpp>

#include "screenprune/ranking.hpp"
#include "screenprune/rng.hpp"

using namespace screenprune;

namespace {

std::vector<std::size_t> argsort(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  return idx;
}

}  // namespace

TEST_CASE("min-max normalization basics") {
  REQUIRE(normalize_scores({2, 4, 6}) == std::vector<double>{0.0, 0.5, 1.0});
  REQUIRE(normalize_scores({7, 7, 7}) == std::vector<double>{0.5, 0.5, 0.5});
  REQUIRE_THROWS_AS(normalize_scores({}), std::invalid_argument);
  REQUIRE_THROWS_AS(normalize_scores({1.0, std::nan("")}), std::invalid_argument);
  REQUIRE_THROWS_AS(normalize_scores({1.0, std::numeric_limits<double>::infinity()}),
                    std::invalid_argument);
}

TEST_CASE("normalization preserves order for distinct values") {
  Rng rng(51);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(10);
    for (auto& x : v) x = rng.uniform(-100, 100);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    rng.shuffle(v);
    REQUIRE(argsort(normalize_scores(v)) == argsort(v));
  }
}

TEST_CASE("ranking metric frozen example") {
  // normalized f = [0, 1], normalized |w| = [1, 0], alpha = 0.4
  auto m = ranking_metric_weights({0.0, 1.0}, {1.0, 0.0}, 0.4);
  REQUIRE(m[0] == Catch::Approx(0.6));
  REQUIRE(m[1] == Catch::Approx(0.4));
}

TEST_CASE("alpha = 1 ranks purely by F-score") {
  std::vector<double> f = {3.0, 1.0, 7.0, 5.0};
  std::vector<double> w = {9.0, 2.0, 1.0, 4.0};
  auto m = ranking_metric_weights(f, w, 1.0);
  REQUIRE(argsort(m) == argsort(f));
}

TEST_CASE("tiny alpha ranks by magnitude when magnitudes are distinct") {
  std::vector<double> f = {3.0, 1.0, 7.0, 5.0};
  std::vector<double> w = {9.0, 2.0, 1.0, 4.0};
  auto m = ranking_metric_weights(f, w, 1e-9);
  REQUIRE(argsort(m) == argsort(w));
}

TEST_CASE("channel metric mirrors the weight metric with gamma") {
  auto mw = ranking_metric_weights({0.0, 1.0}, {1.0, 0.0}, 0.4);
  auto mc = ranking_metric_channels({0.0, 1.0}, {1.0, 0.0}, 0.4);
  REQUIRE(mw == mc);

  // zero gamma + minimal F ranks last
  auto m = ranking_metric_channels({0.0, 5.0, 3.0}, {0.0, 1.2, 0.7}, 0.5);
  REQUIRE(std::min_element(m.begin(), m.end()) - m.begin() == 0);
}

TEST_CASE("metric rejects malformed input") {
  REQUIRE_THROWS_AS(ranking_metric_weights({1.0}, {1.0, 2.0}, 0.5), std::invalid_argument);
  REQUIRE_THROWS_AS(ranking_metric_weights({1.0}, {-1.0}, 0.5), std::invalid_argument);
  REQUIRE_THROWS_AS(ranking_metric_weights({1.0}, {1.0}, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(ranking_metric_weights({1.0}, {1.0}, 1.5), std::invalid_argument);
}

TEST_CASE("scaling all F-scores leaves the metric ordering unchanged") {
  Rng rng(52);
  std::vector<double> f(12), w(12);
  for (auto& x : f) x = rng.uniform(0, 50);
  for (auto& x : w) x = rng.uniform(0, 2);
  auto m1 = ranking_metric_weights(f, w, 0.4);
  std::vector<double> f_scaled = f;
  for (auto& x : f_scaled) x *= 37.5;
  auto m2 = ranking_metric_weights(f_scaled, w, 0.4);
  for (std::size_t i = 0; i < m1.size(); ++i) REQUIRE(m1[i] == Catch::Approx(m2[i]).margin(1e-12));
}
