#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hauslev/grid.hpp"
#include "hauslev/synth.hpp"

namespace hauslev {

/// 2^26 unless HAUSLEV_CELL_BUDGET holds a positive integer.
std::uint64_t default_cell_budget();

/// Sparse per-cell sample counts at one resolution.
struct Histogram {
  DyadicGrid grid{1, 0};
  std::size_t n = 0;
  std::vector<MortonKey> keys;        // occupied cells, sorted
  std::vector<std::uint64_t> counts;  // parallel to keys

  std::uint64_t count(MortonKey key) const;
  std::uint64_t count(const CellIndex& cell) const { return count(key_of(cell, grid)); }
  /// Empirical density count / (n mu(A)).
  double density(std::uint64_t count) const {
    return static_cast<double>(count) / (static_cast<double>(n) * grid.cell_measure());
  }
  double f_hat(const CellIndex& cell) const { return density(count(cell)); }
  std::uint64_t max_count() const;
  /// Counts summed over 2^(levels d) children.
  Histogram coarsened(int levels) const;
};

Histogram build_histogram(const SampleSet& samples, int j,
                          std::uint64_t cell_budget = default_cell_budget());
Histogram build_histogram_serial(const SampleSet& samples, int j,
                                 std::uint64_t cell_budget = default_cell_budget());

/// Sample cell keys at a top resolution, sorted once; histograms at any
/// coarser level come from one linear pass.
class SortedSample {
 public:
  SortedSample(const SampleSet& samples, int top_j);
  Histogram at(int j) const;
  int top() const noexcept { return top_; }

 private:
  int d_;
  int top_;
  std::size_t n_;
  std::vector<MortonKey> keys_;
};

/// Cells with f_hat >= gamma; gamma must be positive.
GridSet plug_in_level_set(const Histogram& h, double gamma);

/// Cells holding at least one sample.
GridSet support_set_estimate(const Histogram& h);

/// Penalty at the histogram's resolution. Only occupied cells and one
/// virtual empty cell are scanned; the expression is monotone in f_hat.
double penalty(const Histogram& h, double delta);

/// min over cells at level j of the max over their children in `fine` of
/// |gamma - f_hat|, empty children included.
double vernier_empirical(const Histogram& fine, int j, double gamma);

/// 2^(-j'/2) times vernier_empirical.
double vernier_modified(const Histogram& fine, int j, double gamma);

/// Literal loop over every parent and child; the test oracle for vernier_empirical.
double vernier_bruteforce(const Histogram& fine, int j, double gamma);

/// Same statistic over a dense per-cell density array at level fine_j (Morton order).
double vernier_dense(std::span<const double> density, int d, int fine_j, int j, double gamma);

/// Population vernier from the model's cell averages at level j + fine_offset.
double vernier_true(const DensityModel& model, int j, int fine_offset, double gamma);

double default_s_n(std::size_t n);
int refinement_offset(double s_n);  // floor(log2 s_n)
int default_max_resolution(std::size_t n, int d, double s_n);
int oracle_resolution(std::size_t n, int d, double alpha, double s_n);
int support_resolution(std::size_t n, int d, double alpha, double s_n);

struct EstimatorConfig {
  double gamma = 1.0;                 // 0 selects the support estimator
  std::optional<double> delta;        // default 1/n
  std::optional<double> s_n;          // default max(2, log2 log2 n)
  std::optional<int> max_resolution;  // default from n, d and s_n
  std::optional<double> alpha;        // known regularity: oracle resolution
  std::optional<int> fixed_j;         // bypass selection entirely
  bool jump_mode = false;
  std::uint64_t cell_budget = default_cell_budget();
  // Synthetic mode: lower constant of the model, enables the epsilon annotation.
  std::optional<double> model_c1;
  std::optional<double> model_alpha;
};

struct SelectionRecord {
  int j = 0;
  int j_prime = 0;
  double vernier = 0.0;
  double penalty = 0.0;
  double objective = 0.0;
  std::optional<double> epsilon;
};

struct SelectionDiagnostics {
  std::vector<SelectionRecord> records;
  int chosen_j = 0;
  std::string mode;  // adaptive, oracle, support, fixed
  double s_n = 0.0;
  double delta = 0.0;
};

/// One JSON array: the per-j records, then {"chosen_j":..,"mode":..}.
std::string diagnostics_to_json(const SelectionDiagnostics& diag);

SelectionDiagnostics select_resolution(const SampleSet& samples, const EstimatorConfig& config);
/// Same selection with the per-j loop run in order on one thread.
SelectionDiagnostics select_resolution_serial(const SampleSet& samples, const EstimatorConfig& config);

struct Estimate {
  GridSet set{DyadicGrid(1, 0)};
  SelectionDiagnostics diagnostics;
};

Estimate estimate(const SampleSet& samples, const EstimatorConfig& config);

}  // namespace hauslev
