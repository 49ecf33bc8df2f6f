#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <map>
#include <random>

#include "generators.hpp"
#include "hauslev/error.hpp"
#include "hauslev/estimator.hpp"
#include "hauslev/synth.hpp"

using namespace hauslev;

namespace {

SampleSet points(int d, std::vector<double> xs) {
  SampleSet s;
  s.d = d;
  s.points = std::move(xs);
  return s;
}

SampleSet random_points(std::mt19937_64& rng, int d, std::size_t n, bool clustered) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SampleSet s;
  s.d = d;
  for (std::size_t i = 0; i < n * d; ++i) {
    double x = u(rng);
    if (clustered) x = x * x;  // pile mass near the origin
    s.points.push_back(x);
  }
  // a few points on cell walls and the closed upper boundary
  if (n > 4) {
    s.points[0] = 1.0;
    s.points[d] = 0.5;
  }
  return s;
}

// Independent penalty: literal scan over every cell, empty ones included.
double penalty_oracle(const Histogram& h, double delta) {
  const int d = h.grid.d(), jp = h.grid.j();
  const double mu = std::ldexp(1.0, -jp * d);
  const double L = std::log(16.0 / delta) + jp * (d + 1) * std::log(2.0);
  const double t = 8.0 * L / (h.n * mu);
  double worst = 0.0;
  for (MortonKey k = 0; k < h.grid.total_cells(); ++k) {
    const double fh = h.count(k) / (h.n * mu);
    worst = std::max(worst, std::sqrt(t * std::max(fh, t)));
  }
  return worst;
}

// Independent vernier over a fully materialized density array indexed by
// lexicographic coordinates, parents found by integer division.
double vernier_oracle(const Histogram& fine, int j, double gamma) {
  const int d = fine.grid.d(), jp = fine.grid.j();
  const std::uint32_t side = 1u << jp, ratio = 1u << (jp - j);
  std::map<std::array<std::uint32_t, 3>, double> worst;
  std::array<std::uint32_t, 3> c{};
  const std::size_t total = std::size_t(1) << (jp * d);
  for (std::size_t lin = 0; lin < total; ++lin) {
    std::size_t rest = lin;
    CellIndex cell;
    for (int a = 0; a < d; ++a) {
      cell.k[a] = rest % side;
      rest /= side;
    }
    for (int a = 0; a < 3; ++a) c[a] = a < d ? cell.k[a] / ratio : 0;
    const double dev = std::abs(gamma - fine.f_hat(cell));
    auto [it, fresh] = worst.emplace(c, dev);
    if (!fresh) it->second = std::max(it->second, dev);
  }
  double best = INFINITY;
  for (const auto& [p, w] : worst) best = std::min(best, w);
  return best;
}

}  // namespace

TEST_CASE("histogram examples") {
  const SampleSet s = points(1, {0.1, 0.2, 0.6, 1.0, 0.5});
  const Histogram h = build_histogram(s, 1);
  CHECK(h.n == 5);
  CHECK(h.count(CellIndex{{0, 0, 0}}) == 2);
  CHECK(h.count(CellIndex{{1, 0, 0}}) == 3);
  CHECK(h.f_hat(CellIndex{{0, 0, 0}}) == doctest::Approx(0.8));
  CHECK(h.max_count() == 3);
  const Histogram h0 = build_histogram(s, 0);
  CHECK(h0.count(CellIndex{}) == 5);
  CHECK(h0.f_hat(CellIndex{}) == 1.0);
  const Histogram h2 = build_histogram(points(2, {0.1, 0.9, 0.9, 0.1, 0.9, 0.95}), 1);
  CHECK(h2.count(CellIndex{{0, 1, 0}}) == 1);
  CHECK(h2.count(CellIndex{{1, 0, 0}}) == 1);
  CHECK(h2.count(CellIndex{{1, 1, 0}}) == 1);
  CHECK(h2.count(CellIndex{{0, 0, 0}}) == 0);
  CHECK_THROWS_AS(build_histogram(s, 10, 512), ResourceError);
  CHECK(build_histogram(points(1, {}), 2).keys.empty());
  const Histogram hand = build_histogram(points(1, {0.1, 0.2, 0.9}), 1);
  CHECK(hand.f_hat(CellIndex{{0, 0, 0}}) == doctest::Approx(4.0 / 3.0));
  CHECK(hand.f_hat(CellIndex{{1, 0, 0}}) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("histogram builders agree and coarsen consistently") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 1 + trial % 3;
    const int j = std::uniform_int_distribution<int>(0, d == 1 ? 12 : 6)(rng);
    const SampleSet s = random_points(rng, d, 1 + rng() % 3000, trial % 2);
    const Histogram a = build_histogram(s, j);
    const Histogram b = build_histogram_serial(s, j);
    CHECK(a.keys == b.keys);
    CHECK(a.counts == b.counts);
    const SortedSample sorted(s, j);
    for (int c = 0; c <= j; ++c) {
      const Histogram direct = build_histogram(s, c);
      const Histogram coarse = a.coarsened(j - c);
      const Histogram from_sorted = sorted.at(c);
      CHECK(coarse.keys == direct.keys);
      CHECK(coarse.counts == direct.counts);
      CHECK(from_sorted.keys == direct.keys);
      CHECK(from_sorted.counts == direct.counts);
    }
    std::uint64_t total = 0;
    for (auto c : a.counts) total += c;
    CHECK(total == s.n());
  }
}

TEST_CASE("plug-in and support estimates") {
  const SampleSet s = points(1, {0.1, 0.2, 0.3, 0.6});
  const Histogram h = build_histogram(s, 1);  // f_hat = 1.5, 0.5
  const GridSet g = plug_in_level_set(h, 1.0);
  CHECK(g.size() == 1);
  CHECK(g.contains(CellIndex{{0, 0, 0}}));
  CHECK(plug_in_level_set(h, 1.5).size() == 1);  // ties are members
  CHECK(plug_in_level_set(h, 0.5).size() == 2);
  CHECK(plug_in_level_set(h, 2.0).empty());
  CHECK_THROWS(plug_in_level_set(h, 0.0));
  const Histogram h3 = build_histogram(s, 3);
  const GridSet sup = support_set_estimate(h3);
  CHECK(sup.size() == 4);
  CHECK(sup.contains(CellIndex{{0, 0, 0}}));
  CHECK(sup.contains(CellIndex{{4, 0, 0}}));
  CHECK(!sup.contains(CellIndex{{7, 0, 0}}));
}

TEST_CASE("penalty") {
  std::vector<double> xs(100, 0.1);
  const Histogram h = build_histogram(points(1, xs), 1);
  CHECK(penalty(h, 0.1) == doctest::Approx(1.4379394342020075).epsilon(1e-14));
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 80; ++trial) {
    const int d = 1 + trial % 3;
    const int j = std::uniform_int_distribution<int>(0, d == 1 ? 10 : (d == 2 ? 5 : 3))(rng);
    const SampleSet s = random_points(rng, d, 1 + rng() % 500, trial % 2);
    const Histogram hist = build_histogram(s, j);
    for (double delta : {0.5, 0.01, 1e-6}) {
      CHECK(penalty(hist, delta) == doctest::Approx(penalty_oracle(hist, delta)).epsilon(1e-13));
    }
  }
  CHECK_THROWS(penalty(h, 0.0));
  CHECK_THROWS(penalty(h, 1.0));
}

TEST_CASE("vernier") {
  // All mass in cell 0 (f_hat = 4): the parent holding it deviates by 3, an
  // all-empty parent by gamma.
  const Histogram h = build_histogram(points(1, {0.1, 0.1, 0.1}), 2);
  CHECK(vernier_empirical(h, 0, 1.0) == 3.0);
  CHECK(vernier_empirical(h, 1, 1.0) == 1.0);
  CHECK(vernier_modified(h, 0, 1.0) == 1.5);
  // Uniform counts: f_hat = 1 everywhere.
  const Histogram u = build_histogram(points(1, {0.1, 0.3, 0.6, 0.9}), 2);
  CHECK(vernier_empirical(u, 1, 1.0) == 0.0);
  CHECK(vernier_empirical(u, 1, 0.25) == 0.75);
  CHECK_THROWS(vernier_empirical(u, 3, 1.0));

  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 300; ++trial) {
    const int d = 1 + trial % 3;
    const int jp = std::uniform_int_distribution<int>(0, d == 1 ? 10 : (d == 2 ? 5 : 3))(rng);
    const int j = std::uniform_int_distribution<int>(0, jp)(rng);
    const SampleSet s = random_points(rng, d, 1 + rng() % 800, trial % 2);
    const Histogram fine = build_histogram(s, jp);
    const double gamma = std::uniform_real_distribution<double>(0.1, 2.0)(rng);
    const double v = vernier_empirical(fine, j, gamma);
    CHECK(v == vernier_bruteforce(fine, j, gamma));
    CHECK(v == doctest::Approx(vernier_oracle(fine, j, gamma)).epsilon(1e-15));
    std::vector<double> dense(fine.grid.total_cells());
    for (MortonKey k = 0; k < dense.size(); ++k) dense[k] = fine.density(fine.count(k));
    CHECK(vernier_dense(dense, d, jp, j, gamma) == v);
    CHECK(vernier_modified(fine, j, gamma) == doctest::Approx(v * std::pow(2.0, -0.5 * jp)));
  }
}

TEST_CASE("population vernier respects its lower bound") {
  // Of the 8 children of any parent, one lies a full child width from the
  // boundary, so it deviates by at least C1 min(h, r_cap)^alpha.
  for (double alpha : {0.5, 1.0, 2.0}) {
    ModelSpec s;
    s.alpha = alpha;
    const DensityModel m = make_model(s);
    for (int j = 0; j <= 6; ++j) {
      const int fine_j = j + 3;
      const DyadicGrid g(1, fine_j);
      const std::vector<double> avg = cell_averages(m, g);
      const double v = vernier_true(m, j, 3, m.gamma());
      CHECK(v == vernier_dense(avg, 1, fine_j, j, m.gamma()));
      const double h = std::ldexp(1.0, -fine_j);
      const double bound = m.constants().c1 * std::pow(std::min(h, m.r_cap()), alpha);
      CHECK(v >= bound * (1 - 1e-12));
      CHECK(v <= m.constants().sandwich_c * std::pow(std::ldexp(1.0, -j), alpha) * (1 + 1e-12));
    }
  }
}

TEST_CASE("resolution rules") {
  CHECK(default_s_n(2) == 2.0);
  CHECK(default_s_n(16) == 2.0);
  CHECK(default_s_n(1u << 16) == 4.0);
  CHECK(default_s_n(std::size_t(1) << 32) == doctest::Approx(5.0));
  CHECK(refinement_offset(2.0) == 1);
  CHECK(refinement_offset(3.9) == 1);
  CHECK(refinement_offset(4.0) == 2);
  CHECK(default_max_resolution(1u << 10, 1, default_s_n(1u << 10)) == 5);
  CHECK(default_max_resolution(8192, 1, default_s_n(8192)) == 7);
  CHECK(default_max_resolution(1u << 17, 1, default_s_n(1u << 17)) == 11);
  CHECK(default_max_resolution(10000, 1, default_s_n(10000)) == 8);
  CHECK(oracle_resolution(8192, 1, 1.0, default_s_n(8192)) == 1);
  CHECK(default_max_resolution(2, 3, 2.0) == 0);
  CHECK_THROWS(default_max_resolution(1, 1, 2.0));
  CHECK_THROWS(oracle_resolution(100, 1, -1.0, 2.0));
}

TEST_CASE("selection") {
  const DensityModel m = make_model(ModelSpec{});
  const SampleSet s = sample(m, 4096, 77);
  EstimatorConfig cfg;
  cfg.gamma = m.gamma();
  const SelectionDiagnostics a = select_resolution(s, cfg);
  const SelectionDiagnostics b = select_resolution_serial(s, cfg);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].objective == b.records[i].objective);
    CHECK(a.records[i].j_prime == a.records[i].j + refinement_offset(a.s_n));
  }
  CHECK(a.chosen_j == b.chosen_j);
  // argmin with ties to the smaller j
  int best = 0;
  for (std::size_t i = 1; i < a.records.size(); ++i)
    if (a.records[i].objective < a.records[best].objective) best = int(i);
  CHECK(a.chosen_j == best);
  CHECK(a.records[a.chosen_j].objective <= a.records.back().objective);
  CHECK(select_resolution(s, cfg).chosen_j == a.chosen_j);

  // Two identical objectives: the collapsed sample has V = gamma at every j and
  // a penalty that grows with j, so j = 0 wins.
  const SampleSet one = points(1, std::vector<double>(64, 0.3));
  cfg.max_resolution = 3;
  CHECK(select_resolution(one, cfg).chosen_j == 0);

  EstimatorConfig jump = cfg;
  jump.jump_mode = true;
  const auto dj = select_resolution(s, jump);
  for (const auto& r : dj.records) {
    const Histogram fine = build_histogram(s, r.j_prime);
    CHECK(r.vernier == doctest::Approx(vernier_modified(fine, r.j, cfg.gamma)).epsilon(1e-14));
  }

  EstimatorConfig annotated;
  annotated.gamma = m.gamma();
  annotated.model_c1 = m.constants().c1;
  annotated.model_alpha = 1.0;
  for (const auto& r : select_resolution(s, annotated).records) CHECK(r.epsilon.has_value());
  CHECK(!a.records[0].epsilon.has_value());

  EstimatorConfig tiny;
  tiny.gamma = 1.0;
  tiny.cell_budget = 16;
  CHECK_THROWS_AS(select_resolution(s, tiny), ResourceError);
  EstimatorConfig bad;
  bad.gamma = 1.0;
  bad.s_n = 1.5;
  CHECK_THROWS_AS(select_resolution(s, bad), std::invalid_argument);
  bad.s_n.reset();
  bad.delta = 1.5;
  CHECK_THROWS_AS(select_resolution(s, bad), std::invalid_argument);
}

TEST_CASE("estimate modes") {
  const DensityModel m = make_model(ModelSpec{});
  const SampleSet s = sample(m, 8192, 5);
  EstimatorConfig cfg;
  cfg.gamma = m.gamma();
  const Estimate adaptive = estimate(s, cfg);
  CHECK(adaptive.diagnostics.mode == "adaptive");
  CHECK(adaptive.set.grid().j() == adaptive.diagnostics.chosen_j);
  CHECK(adaptive.set == plug_in_level_set(build_histogram(s, adaptive.diagnostics.chosen_j), cfg.gamma));

  cfg.alpha = 1.0;
  const Estimate oracle = estimate(s, cfg);
  CHECK(oracle.diagnostics.mode == "oracle");
  CHECK(oracle.diagnostics.chosen_j == 1);
  CHECK(oracle.diagnostics.records.empty());

  cfg.fixed_j = 4;
  const Estimate fixed = estimate(s, cfg);
  CHECK(fixed.diagnostics.mode == "fixed");
  CHECK(fixed.set.grid().j() == 4);

  ModelSpec sup;
  sup.support = true;
  const DensityModel ms = make_model(sup);
  EstimatorConfig sc;
  sc.gamma = 0.0;
  const Estimate support = estimate(sample(ms, 4096, 9), sc);
  CHECK(support.diagnostics.mode == "support");
  CHECK(!support.set.empty());

  // Raising gamma shrinks the plug-in set at a fixed resolution.
  EstimatorConfig f;
  f.fixed_j = 5;
  std::size_t previous = SIZE_MAX;
  for (double g : {0.25, 0.5, 1.0, 1.5, 2.0}) {
    f.gamma = g;
    const std::size_t size = estimate(s, f).set.size();
    CHECK(size <= previous);
    previous = size;
  }
}

TEST_CASE("cell budget from the environment") {
  setenv("HAUSLEV_CELL_BUDGET", "1234", 1);
  CHECK(default_cell_budget() == 1234);
  setenv("HAUSLEV_CELL_BUDGET", "junk", 1);
  CHECK(default_cell_budget() == (std::uint64_t(1) << 26));
  unsetenv("HAUSLEV_CELL_BUDGET");
  CHECK(default_cell_budget() == (std::uint64_t(1) << 26));
}

TEST_CASE("diagnostics json") {
  SelectionDiagnostics d;
  d.records.push_back({0, 1, 0.5, 0.25, 0.75, std::nullopt});
  d.records.push_back({1, 2, 0.125, 1.0 / 0.0, 1.0 / 0.0, 0.5});
  d.chosen_j = 0;
  d.mode = "adaptive";
  d.s_n = 2.0;
  d.delta = 0.001;
  CHECK(diagnostics_to_json(d) ==
        "[{\"j\":0,\"j_prime\":1,\"vernier\":0.5,\"penalty\":0.25,\"objective\":0.75},"
        "{\"j\":1,\"j_prime\":2,\"vernier\":0.125,\"penalty\":null,\"objective\":null,\"epsilon\":0.5},"
        "{\"chosen_j\":0,\"mode\":\"adaptive\",\"s_n\":2,\"delta\":0.001}]");
}
