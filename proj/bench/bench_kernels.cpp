// Serial reference vs OpenMP kernel timings. Usage: bench_kernels [repeats]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>

#include "hauslev/edt.hpp"
#include "hauslev/estimator.hpp"
#include "hauslev/grid.hpp"
#include "hauslev/synth.hpp"

using namespace hauslev;

namespace {

double best_of(int repeats, const std::function<void()>& f) {
  double best = 1e300;
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const std::string& name, double serial, double parallel) {
  std::printf("%-34s %10.4f %10.4f %7.2fx\n", name.c_str(), serial, parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 3;
  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-34s %10s %10s %8s\n", "kernel", "serial s", "openmp s", "speedup");

  ModelSpec ball;
  ball.d = 2;
  ball.shape = Shape::ball;
  const DensityModel m2 = make_model(ball);
  const SampleSet s2 = sample(m2, 2'000'000, 1);
  row("histogram d=2 n=2e6 j=9 (map / sort)", best_of(repeats, [&] { build_histogram_serial(s2, 9); }),
      best_of(repeats, [&] { build_histogram(s2, 9); }));

  std::mt19937_64 rng(2);
  const Lattice lat{3, 256};
  std::vector<std::uint8_t> mask(lat.size());
  for (auto& b : mask) b = rng() % 1000 == 0;
  row("distance transform 256^3", best_of(repeats, [&] { squared_distance_transform_serial(mask, lat); }),
      best_of(repeats, [&] { squared_distance_transform(mask, lat); }));

  const GridSet a = true_level_set(m2, 9);
  const GridSet b = true_level_set(m2, 8);
  // not serial vs parallel: pairwise scan against the distance-transform path
  row("hausdorff pairwise / transform",
      best_of(repeats, [&] { hausdorff(a, b, HausdorffMethod::pairwise); }),
      best_of(repeats, [&] { hausdorff(a, b, HausdorffMethod::distance_transform); }));

  row("true level set d=2 j=11", best_of(repeats, [&] { true_level_set_serial(m2, 11); }),
      best_of(repeats, [&] { true_level_set(m2, 11); }));

  const DensityModel m1 = make_model(ModelSpec{});
  const SampleSet s1 = sample(m1, 1u << 20, 3);
  EstimatorConfig cfg;
  cfg.gamma = m1.gamma();
  row("selection d=1 n=2^20", best_of(repeats, [&] { select_resolution_serial(s1, cfg); }),
      best_of(repeats, [&] { select_resolution(s1, cfg); }));
  return 0;
}
