#include <doctest.h>

#include <cmath>

#include "ipred/dtw.hpp"
#include "ipred/error.hpp"
#include "ipred/rng.hpp"
#include "oracles.hpp"

using namespace ipred;

namespace {

std::vector<Point2> random_seq(Rng& rng, std::size_t n) {
  std::vector<Point2> s(n);
  for (auto& p : s) p = {rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
  return s;
}

}  // namespace

TEST_SUITE("dtw") {
  TEST_CASE("identical sequences cost zero") {
    Rng rng(1);
    for (int k = 0; k < 20; ++k) {
      const auto s = random_seq(rng, 1 + rng.uniform_index(8));
      CHECK(dtw_distance(s, s).cost == 0.0);
    }
  }

  TEST_CASE("single pair is the Euclidean distance") {
    const std::vector<Point2> a{{0, 0}}, b{{3, 4}};
    CHECK(dtw_distance(a, b).cost == 5.0);
  }

  TEST_CASE("empty input throws") {
    const std::vector<Point2> a{{0, 0}}, e;
    CHECK_THROWS_AS(dtw_distance(a, e), InvalidArgument);
    CHECK_THROWS_AS(dtw_distance(e, a), InvalidArgument);
    CHECK_THROWS_AS(dtw_cost(e, a), InvalidArgument);
  }

  TEST_CASE("dynamic program equals exhaustive enumeration") {
    Rng rng(2024);
    for (int k = 0; k < 100; ++k) {
      const auto a = random_seq(rng, 1 + rng.uniform_index(6));
      const auto b = random_seq(rng, 1 + rng.uniform_index(6));
      CHECK(dtw_distance(a, b).cost == oracle::brute_force_dtw(a, b));
    }
  }

  TEST_CASE("warp path is well formed and sums to the cost") {
    Rng rng(7);
    for (int k = 0; k < 100; ++k) {
      const auto a = random_seq(rng, 1 + rng.uniform_index(9));
      const auto b = random_seq(rng, 1 + rng.uniform_index(9));
      const auto r = dtw_distance(a, b);
      REQUIRE(!r.path.empty());
      CHECK(r.path.front() == std::pair<std::size_t, std::size_t>{0, 0});
      CHECK(r.path.back() == std::pair<std::size_t, std::size_t>{a.size() - 1, b.size() - 1});
      double sum = 0.0;
      for (std::size_t s = 0; s < r.path.size(); ++s) {
        sum += std::hypot(a[r.path[s].first].x - b[r.path[s].second].x, a[r.path[s].first].y - b[r.path[s].second].y);
        if (s > 0) {
          const auto di = r.path[s].first - r.path[s - 1].first;
          const auto dj = r.path[s].second - r.path[s - 1].second;
          CHECK(di <= 1);
          CHECK(dj <= 1);
          CHECK(di + dj >= 1);
        }
      }
      CHECK(sum == doctest::Approx(r.cost).epsilon(1e-12));
    }
  }

  TEST_CASE("symmetry and the low-memory variant") {
    Rng rng(9);
    for (int k = 0; k < 100; ++k) {
      const auto a = random_seq(rng, 1 + rng.uniform_index(12));
      const auto b = random_seq(rng, 1 + rng.uniform_index(12));
      const double ab = dtw_distance(a, b).cost;
      CHECK(ab >= 0.0);
      CHECK(dtw_distance(b, a).cost == doctest::Approx(ab).epsilon(1e-12));
      CHECK(dtw_cost(a, b) == doctest::Approx(ab).epsilon(1e-12));
    }
  }

  TEST_CASE("diagonal preferred on ties") {
    // All local costs are zero, so every path ties.
    const std::vector<Point2> a{{0, 0}, {0, 0}, {0, 0}};
    const auto r = dtw_distance(a, a);
    REQUIRE(r.path.size() == 3);
    CHECK(r.path[1] == std::pair<std::size_t, std::size_t>{1, 1});
  }

  TEST_CASE("moving a point of b away from every point of a does not lower the cost") {
    Rng rng(13);
    for (int k = 0; k < 50; ++k) {
      auto a = random_seq(rng, 4);
      for (auto& p : a) p.x = std::abs(p.x);  // a lies in x >= 0
      auto b = random_seq(rng, 4);
      b[2].x = -std::abs(b[2].x) - 3.0;  // push further into x < 0
      auto farther = b;
      farther[2].x -= 5.0;
      CHECK(dtw_distance(a, farther).cost >= dtw_distance(a, b).cost);
    }
  }
}
