#include <catch2/catch_amalgamated.hpp>

#include "screenprune/schedule.hpp"

using namespace screenprune;

TEST_CASE("annealing endpoints are exact") {
  for (double k : {2.0, 4.0, 6.0, 8.0}) {
    REQUIRE(annealing_fraction(0, 80, k) == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(annealing_fraction(80, 80, k) == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(annealing_fraction(40, 80, k) == Catch::Approx(0.5).margin(1e-12));
  }
}

TEST_CASE("keep_count endpoints") {
  REQUIRE(keep_count(0, 80, 0.1, 4.0, 1000) == 1000);
  REQUIRE(keep_count(80, 80, 0.1, 4.0, 1000) == 100);
  // logistic midpoint symmetry: kept = n0 * (1 - 0.5*(1-r))
  REQUIRE(keep_count(40, 80, 0.1, 4.0, 1000) == 550);
}

TEST_CASE("keep_count reproduces the 267K -> 11.5K target") {
  // 95.7% pruned leaves r = 0.043 of 267000 members
  REQUIRE(keep_count(80, 80, 0.043, 4.0, 267000) == 11481);
}

TEST_CASE("keep_count is non-increasing for every decay rate") {
  for (double k : {2.0, 4.0, 6.0, 8.0}) {
    for (std::size_t total : {std::size_t(10), std::size_t(80)}) {
      std::size_t prev = keep_count(0, total, 0.05, k, 267000);
      REQUIRE(prev == 267000);
      for (std::size_t e = 1; e <= total; ++e) {
        const std::size_t cur = keep_count(e, total, 0.05, k, 267000);
        REQUIRE(cur <= prev);
        prev = cur;
      }
      REQUIRE(prev == std::size_t(std::llround(267000 * 0.05)));
    }
  }
}

TEST_CASE("keep_count validates its domain") {
  REQUIRE_THROWS_AS(keep_count(11, 10, 0.1, 4.0, 100), std::invalid_argument);
  REQUIRE_THROWS_AS(keep_count(5, 10, 0.0, 4.0, 100), std::invalid_argument);
  REQUIRE_THROWS_AS(keep_count(5, 10, 1.0, 4.0, 100), std::invalid_argument);
}

TEST_CASE("larger decay rates concentrate pruning mid-run") {
  // steeper k prunes less early and catches up by the midpoint
  const double early_k2 = annealing_fraction(10, 80, 2.0);
  const double early_k8 = annealing_fraction(10, 80, 8.0);
  REQUIRE(early_k8 < early_k2);
  const double late_k2 = annealing_fraction(70, 80, 2.0);
  const double late_k8 = annealing_fraction(70, 80, 8.0);
  REQUIRE(late_k8 > late_k2);
}

TEST_CASE("prune schedule validation") {
  PruneSchedule s;
  s.keep_ratio = 0.1;
  REQUIRE_NOTHROW(s.validate());
  s.keep_ratio = 1.0;
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);
  s.keep_ratio = 0.5;
  s.keep_ratios["fc1"] = -0.1;
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);
  s.keep_ratios.clear();
  s.decay_rate = 0.0;
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("per-group ratios override the global one") {
  PruneSchedule s;
  s.keep_ratio = 0.1;
  s.keep_ratios["fc3"] = 0.25;
  REQUIRE(s.ratio_for("fc1") == 0.1);
  REQUIRE(s.ratio_for("fc3") == 0.25);
}
