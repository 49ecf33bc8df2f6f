#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "generators.hpp"
#include "hauslev/grid.hpp"
#include "hauslev/gridset_io.hpp"

using namespace hauslev;

namespace {

GridSet cells1(int j, std::vector<std::uint32_t> ks) {
  std::vector<CellIndex> cs;
  for (auto k : ks) cs.push_back(CellIndex{{k, 0, 0}});
  return GridSet(DyadicGrid(1, j), cs);
}

// Literal definition written independently of the library: nested loops over centers.
double hausdorff_literal(const GridSet& a, const GridSet& b) {
  const int d = a.grid().d();
  if (a.empty() || b.empty()) return std::sqrt(double(d));
  auto pts = [](const GridSet& s) {
    std::vector<std::vector<double>> out;
    const double h = std::ldexp(1.0, -s.grid().j());
    for (const auto& c : s.cells()) {
      std::vector<double> p;
      for (int i = 0; i < s.grid().d(); ++i) p.push_back((c.k[i] + 0.5) * h);
      out.push_back(p);
    }
    return out;
  };
  const auto pa = pts(a), pb = pts(b);
  auto directed = [d](const auto& from, const auto& to) {
    double sup = 0;
    for (const auto& p : from) {
      double inf = std::numeric_limits<double>::infinity();
      for (const auto& q : to) {
        double s = 0;
        for (int i = 0; i < d; ++i) s += (p[i] - q[i]) * (p[i] - q[i]);
        inf = std::min(inf, std::sqrt(s));
      }
      sup = std::max(sup, inf);
    }
    return sup;
  };
  return std::max(directed(pa, pb), directed(pb, pa));
}

}  // namespace

TEST_CASE("grid construction limits") {
  CHECK_THROWS_AS(DyadicGrid(0, 1), std::domain_error);
  CHECK_THROWS_AS(DyadicGrid(4, 1), std::domain_error);
  CHECK_THROWS_AS(DyadicGrid(1, -1), std::domain_error);
  CHECK_THROWS_AS(DyadicGrid(3, 22), std::domain_error);
  const DyadicGrid g(2, 3);
  CHECK(g.cells_per_axis() == 8);
  CHECK(g.total_cells() == 64);
  CHECK(g.sidelength() == 0.125);
}

TEST_CASE("locate examples") {
  const double origin[3] = {0, 0, 0};
  CHECK(locate(std::span<const double>(origin, 3), DyadicGrid(3, 3)) == CellIndex{{0, 0, 0}});
  const double one[1] = {1.0};
  CHECK(locate(std::span<const double>(one, 1), DyadicGrid(1, 2)).k[0] == 3);
  const double p[2] = {0.30, 0.70};
  const auto c = locate(std::span<const double>(p, 2), DyadicGrid(2, 2));
  CHECK(c.k[0] == static_cast<std::uint32_t>(std::floor(0.30 * 4)));
  CHECK(c.k[1] == static_cast<std::uint32_t>(std::floor(0.70 * 4)));
  CHECK(c == CellIndex{{1, 2, 0}});
  const double bad[1] = {1.5};
  CHECK_THROWS_AS(locate(std::span<const double>(bad, 1), DyadicGrid(1, 2)), std::domain_error);
  const double neg[1] = {-0.1};
  CHECK_THROWS_AS(locate(std::span<const double>(neg, 1), DyadicGrid(1, 2)), std::domain_error);
}

TEST_CASE("center and locate round trip") {
  std::mt19937_64 rng(11);
  for (int d = 1; d <= 3; ++d) {
    for (int t = 0; t < 200; ++t) {
      const DyadicGrid g(d, gen::level(rng, d));
      CellIndex c;
      for (int i = 0; i < d; ++i) c.k[i] = std::uniform_int_distribution<std::uint32_t>(0, g.cells_per_axis() - 1)(rng);
      const auto x = center(c, g);
      CHECK(locate(std::span<const double>(x.data(), d), g) == c);
      CHECK(cell_of(key_of(c, g), g) == c);
    }
  }
}

TEST_CASE("grid set members are unique and ordered") {
  const GridSet s = cells1(2, {3, 1, 3, 0});
  CHECK(s.size() == 3);
  CHECK(s.measure() == 0.75);
  CHECK(s.contains(CellIndex{{1, 0, 0}}));
  CHECK_FALSE(s.contains(CellIndex{{2, 0, 0}}));
  std::vector<CellIndex> bad{CellIndex{{4, 0, 0}}};
  CHECK_THROWS_AS(GridSet(DyadicGrid(1, 2), bad), std::domain_error);
  const auto cs = GridSet(DyadicGrid(2, 1), std::vector<CellIndex>{{{1, 0, 0}}, {{0, 1, 0}}, {{0, 0, 0}}}).cells();
  REQUIRE(cs.size() == 3);
  CHECK(cs[0] == CellIndex{{0, 0, 0}});
  CHECK(cs[1] == CellIndex{{0, 1, 0}});
  CHECK(cs[2] == CellIndex{{1, 0, 0}});
}

TEST_CASE("hausdorff examples") {
  CHECK(hausdorff(cells1(2, {0}), cells1(2, {3})) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(hausdorff_bruteforce(cells1(1, {0}), cells1(1, {0, 1})) == 0.5);
  CHECK(hausdorff(cells1(1, {0}), cells1(1, {0, 1})) == 0.5);
  CHECK(hausdorff(cells1(3, {2, 5}), cells1(3, {2, 5})) == 0.0);
  CHECK(hausdorff_bruteforce(cells1(3, {4}), cells1(3, {4})) == 0.0);
  const GridSet two(DyadicGrid(2, 2), std::vector<CellIndex>{{{1, 1, 0}}});
  const GridSet empty2{DyadicGrid(2, 2)};
  CHECK(hausdorff(two, empty2) == std::sqrt(2.0));
  CHECK(hausdorff(empty2, two) == std::sqrt(2.0));
  CHECK(hausdorff(empty2, empty2) == std::sqrt(2.0));
  CHECK_THROWS_AS(hausdorff(cells1(2, {0}), two), std::domain_error);
}

TEST_CASE("hausdorff agrees with the literal definition on random sets") {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 300; ++t) {
    const int d = 1 + t % 3;
    const GridSet a = gen::grid_set(rng, d, gen::level(rng, d), 64);
    const GridSet b = gen::grid_set(rng, d, gen::level(rng, d), 64);
    const double ref = hausdorff_literal(a, b);
    CHECK(hausdorff_bruteforce(a, b) == ref);
    CHECK(hausdorff(a, b) == ref);
    CHECK(hausdorff(a, b, HausdorffMethod::pairwise) == ref);
    if (!a.empty() && !b.empty()) CHECK(hausdorff(a, b, HausdorffMethod::distance_transform) == ref);
  }
}

TEST_CASE("hausdorff metric properties") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    const int d = 1 + t % 3;
    const GridSet a = gen::grid_set(rng, d, gen::level(rng, d), 40, false);
    const GridSet b = gen::grid_set(rng, d, gen::level(rng, d), 40, false);
    const GridSet c = gen::grid_set(rng, d, gen::level(rng, d), 40, false);
    CHECK(hausdorff(a, b) == hausdorff(b, a));
    CHECK(hausdorff(a, a) == 0.0);
    CHECK(hausdorff(a, c) <= hausdorff(a, b) + hausdorff(b, c) + 1e-12);
    if (!(a == b) && a.grid() == b.grid()) CHECK(hausdorff(a, b) > 0.0);
  }
}

TEST_CASE("symmetric difference") {
  CHECK(symmetric_difference_measure(cells1(1, {0}), cells1(1, {0})) == 0.0);
  CHECK(symmetric_difference_measure(cells1(1, {0}), cells1(1, {1})) == 1.0);
  const GridSet a(DyadicGrid(2, 1), std::vector<CellIndex>{{{0, 0, 0}}});
  const GridSet b(DyadicGrid(2, 1), std::vector<CellIndex>{{{0, 0, 0}}, {{1, 1, 0}}});
  CHECK(symmetric_difference_measure(a, b) == 0.25);

  // Mixed resolutions against explicit refinement, and the inclusion-exclusion identity.
  std::mt19937_64 rng(99);
  for (int t = 0; t < 200; ++t) {
    const int d = 1 + t % 3;
    const GridSet x = gen::grid_set(rng, d, gen::level(rng, d), 100);
    const GridSet y = gen::grid_set(rng, d, gen::level(rng, d), 100);
    const int top = std::max(x.grid().j(), y.grid().j());
    const GridSet xr = x.refined(top - x.grid().j());
    const GridSet yr = y.refined(top - y.grid().j());
    std::size_t inter = 0;
    for (auto k : xr.keys()) inter += std::binary_search(yr.keys().begin(), yr.keys().end(), k);
    const double expect = x.measure() + y.measure() - 2.0 * inter * xr.grid().cell_measure();
    CHECK(symmetric_difference_measure(x, y) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(symmetric_difference_measure(x, y) == symmetric_difference_measure(y, x));
  }
}

TEST_CASE("inner cover distance") {
  SUBCASE("full grid") {
    for (int d = 1; d <= 2; ++d) {
      const GridSet full = GridSet::full(DyadicGrid(d, 4));
      const double eps = 0.125;
      CHECK(inner_cover_distance(full, eps) <= eps);
    }
  }
  SUBCASE("square block") {
    std::vector<CellIndex> cells;
    for (std::uint32_t x = 4; x < 12; ++x)
      for (std::uint32_t y = 4; y < 12; ++y) cells.push_back(CellIndex{{x, y, 0}});
    const GridSet block(DyadicGrid(2, 4), cells);
    const double eps = 0.125;
    const double v = inner_cover_distance(block, eps);
    // Brute force: covered centers are those whose eps-ball of centers lies in the block.
    const double h = 1.0 / 16;
    std::vector<std::array<double, 2>> covered, cover, boundary;
    for (const auto& c : cells) {
      bool ok = true;
      for (int x = 0; x < 16 && ok; ++x)
        for (int y = 0; y < 16 && ok; ++y) {
          const double dx = (x - double(c.k[0])) * h, dy = (y - double(c.k[1])) * h;
          if (dx * dx + dy * dy <= eps * eps && !block.contains(CellIndex{{std::uint32_t(x), std::uint32_t(y), 0}})) ok = false;
        }
      if (ok) covered.push_back({(c.k[0] + 0.5) * h, (c.k[1] + 0.5) * h});
    }
    for (int x = 0; x < 16; ++x)
      for (int y = 0; y < 16; ++y) {
        const double px = (x + 0.5) * h, py = (y + 0.5) * h;
        for (const auto& q : covered)
          if ((px - q[0]) * (px - q[0]) + (py - q[1]) * (py - q[1]) <= eps * eps) {
            cover.push_back({px, py});
            break;
          }
      }
    double expect = 0;
    for (const auto& c : cells) {
      const bool edge = c.k[0] == 4 || c.k[0] == 11 || c.k[1] == 4 || c.k[1] == 11;
      if (!edge) continue;
      double best = 1e9;
      for (const auto& q : cover)
        best = std::min(best, std::hypot((c.k[0] + 0.5) * h - q[0], (c.k[1] + 0.5) * h - q[1]));
      expect = std::max(expect, best);
    }
    CHECK(std::isfinite(v));
    CHECK(v <= 2 * eps);
    CHECK(v == doctest::Approx(expect).epsilon(1e-14));
  }
  SUBCASE("thin ribbon has no inner cover") {
    std::vector<CellIndex> cells;
    for (std::uint32_t x = 0; x < 64; ++x) cells.push_back(CellIndex{{x, 32, 0}});
    const GridSet ribbon(DyadicGrid(2, 6), cells);
    CHECK(std::isinf(inner_cover_distance(ribbon, 4.0 / 64)));
  }
  SUBCASE("preconditions") {
    CHECK_THROWS_AS(inner_cover_distance(GridSet(DyadicGrid(1, 3)), 0.5), std::domain_error);
    CHECK_THROWS_AS(inner_cover_distance(GridSet::full(DyadicGrid(1, 3)), 0.1), std::domain_error);
  }
}

TEST_CASE("refinement keeps the center cloud within one cell diagonal") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const int d = 1 + t % 3;
    const GridSet a = gen::grid_set(rng, d, gen::level(rng, d), 30, false);
    const GridSet r = a.refined(1);
    CHECK(r.size() == a.size() << d);
    CHECK(a.is_subset_of(a));
    CHECK(hausdorff(a, r) <= std::sqrt(double(d)) * a.grid().sidelength());
    CHECK(symmetric_difference_measure(a, r) == 0.0);
  }
}

TEST_CASE("grid set JSON round trip") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const int d = 1 + t % 3;
    const GridSet a = gen::grid_set(rng, d, gen::level(rng, d), 50);
    const std::string text = gridset_to_json(a);
    const GridSet b = gridset_from_json(text);
    CHECK(b == a);
    CHECK(gridset_to_json(b) == text);
  }
  CHECK(gridset_to_json(cells1(2, {3, 1})) == "{\"d\":1,\"j\":2,\"cells\":[[1],[3]]}");
  CHECK_THROWS(gridset_from_json("{\"d\":1,\"j\":2,\"cells\":[[4]]}"));
  CHECK_THROWS(gridset_from_json("{\"d\":2,\"j\":2,\"cells\":[[1]]}"));
  CHECK_THROWS(gridset_from_json("not json"));
}
