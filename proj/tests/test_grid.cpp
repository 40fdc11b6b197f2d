#include <catch2/catch.hpp>

#include "iflab/grid.hpp"

using namespace iflab;

TEST_CASE("full-closure grid on (0,1]") {
  Domain d = Domain::unit_interval(GridRule::FullClosure);
  Grid g = build_grid(d, 4);
  REQUIRE(g.size() == 4);
  REQUIRE(g.point(0)[0] == 1);
  REQUIRE(g.point(3)[0] == 4);

  Grid g1 = build_grid(d, 1);
  REQUIRE(g1.size() == 1);
  REQUIRE(g1.point(0)[0] == 1);
}

TEST_CASE("interior-margin grid matches the (N-5)^2 count") {
  Domain d = Domain::unit_square(GridRule::InteriorMargin, 2);
  Grid g = build_grid(d, 8);
  REQUIRE(g.size() == 9);  // {3,4,5}^2
  REQUIRE(g.pmin[0] == 3);
  REQUIRE(g.pmax[0] == 5);
  for (int N : {8, 12, 20})
    REQUIRE(build_grid(d, N).size() == std::ptrdiff_t(N - 5) * (N - 5));
}

TEST_CASE("degenerate grid raises") {
  Domain d = Domain::unit_square(GridRule::InteriorMargin, 2);
  REQUIRE_THROWS_WITH(build_grid(d, 4), Catch::Contains("degenerate grid"));
}

TEST_CASE("margin check on the rectangle geometry") {
  Domain d = Domain::unit_square(GridRule::InteriorMargin, 2);
  // 2/N >= sqrt(2)/N always
  auto r8 = margin_check(d, 8);
  REQUIRE(r8.applicable);
  REQUIRE(r8.ok);
  REQUIRE(r8.margin_distance == Approx(0.25));
  REQUIRE(r8.required == Approx(std::sqrt(2.0) / 8.0));

  auto r6 = margin_check(d, 6);
  REQUIRE(r6.ok);
  REQUIRE(r6.margin_distance == Approx(2.0 / 6.0));

  Domain fc = Domain::unit_interval(GridRule::FullClosure);
  auto rf = margin_check(fc, 8);
  REQUIRE_FALSE(rf.applicable);
  REQUIRE_FALSE(rf.ok);
}

TEST_CASE("margin rule below sqrt(d) fails the check") {
  Domain d = Domain::unit_square(GridRule::InteriorMargin, 1);
  auto r = margin_check(d, 8);
  REQUIRE(r.applicable);
  REQUIRE_FALSE(r.ok);  // 1/N < sqrt(2)/N
}

TEST_CASE("index bijection is deterministic and lexicographic") {
  Domain d = Domain::unit_square(GridRule::InteriorMargin, 2);
  Grid g = build_grid(d, 10);
  Grid g2 = build_grid(d, 10);
  REQUIRE(g.size() == g2.size());
  for (std::ptrdiff_t i = 0; i < g.size(); ++i) {
    REQUIRE(g.point(i) == g2.point(i));
    REQUIRE(g.index_of(g.point(i)) == i);
  }
  // lexicographic: first axis slowest
  REQUIRE(g.point(0)[0] == g.pmin[0]);
  REQUIRE(g.point(1)[0] == g.pmin[0]);
  REQUIRE(g.point(1)[1] == g.pmin[1] + 1);
}

TEST_CASE("rescaled nodes become dense in the domain") {
  Domain d = Domain::unit_interval(GridRule::FullClosure);
  const double target = 0.3711;
  double prev = 1.0;
  for (int N : {8, 16, 32, 64}) {
    Grid g = build_grid(d, N);
    double best = 1.0;
    for (std::ptrdiff_t i = 0; i < g.size(); ++i)
      best = std::min(best, std::fabs(double(g.point(i)[0]) / N - target));
    REQUIRE(best <= prev + 1e-15);
    REQUIRE(best <= 1.0 / N);
    prev = best;
  }
}

TEST_CASE("exhaustion: grids grow with N") {
  Domain d = Domain::unit_square(GridRule::InteriorMargin, 2);
  // monotone inclusion of D_N translates into nested index boxes after
  // rescaling; check k_N is nondecreasing
  std::ptrdiff_t prev = 0;
  for (int N : {8, 16, 32, 64}) {
    Grid g = build_grid(d, N);
    REQUIRE(g.size() >= prev);
    prev = g.size();
  }
}
