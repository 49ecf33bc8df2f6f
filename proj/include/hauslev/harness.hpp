#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hauslev/estimator.hpp"
#include "hauslev/synth.hpp"

namespace hauslev {

enum class Method { adaptive, oracle, fixed_j, support };

std::string to_string(Method m);
Method parse_method(const std::string& name);

struct SweepPlan {
  ModelSpec model;
  Method method = Method::adaptive;
  std::vector<std::size_t> n_grid;
  int replications = 1;
  std::uint64_t base_seed = 0;
  std::optional<int> j_ref;       // default: max j_hat over the sweep + 3
  std::optional<int> fixed_j;     // required by Method::fixed_j
  std::optional<double> delta;    // estimator defaults when unset
  std::optional<double> s_n;
  std::optional<int> max_resolution;
  std::optional<double> alpha;    // oracle/support exponent; default: the model's alpha
  bool jump_mode = false;
  bool hausdorff_loss = true;
  bool symdiff_loss = true;
  bool timing = false;            // wall time breaks byte-identical reruns
};

/// Throws std::invalid_argument naming the first bad field.
void validate(const SweepPlan& plan);

/// Per-replication seed: base_seed XOR mix(n, rep), mix built from splitmix64.
std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t n, int rep);

struct SweepRow {
  std::size_t n = 0;
  int rep = 0;
  Method method = Method::adaptive;
  int j_hat = 0;
  std::optional<double> hausdorff;
  std::optional<double> symdiff;
  double raster_bias = 0.0;
  double seconds = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // (n, rep) order
  int j_ref = 0;
  double target_exponent = 0.0;
};

SweepResult run_sweep(const SweepPlan& plan);

struct RateFit {
  std::vector<std::pair<double, double>> points;  // (ln(n / ln n), ln value)
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double target_exponent = 0.0;
  std::vector<std::string> warnings;
};

/// OLS of y on x with the textbook slope standard error; needs >= 3 points.
RateFit fit_line(std::vector<std::pair<double, double>> points);

/// OLS of ln(mean loss) on ln(n/ln n). Zero means are dropped with a
/// warning; fewer than 4 surviving points throws std::runtime_error.
RateFit fit_rate(const std::vector<std::pair<std::size_t, double>>& mean_loss, double target_exponent);
RateFit fit_rate(const SweepResult& result, double target_exponent);

/// OLS of the per-n mean of ln 2^-j_hat on ln(n/ln n).
RateFit fit_resolution_rate(const SweepResult& result, double target_exponent);

/// Per-n mean Hausdorff loss, in n order.
std::vector<std::pair<std::size_t, double>> mean_hausdorff_by_n(const SweepResult& result);
/// Per-n median of 2^-j_hat, in n order.
std::vector<std::pair<std::size_t, double>> median_cell_side_by_n(const SweepResult& result);

double level_set_exponent(int d, double alpha);  // -1/(d + 2 alpha)
double support_exponent(int d, double alpha);    // -1/(d + alpha)

struct MonteCarloReport {
  int trials = 0;
  int violations = 0;
  double rate() const noexcept { return trials ? static_cast<double>(violations) / trials : 0.0; }
};

/// Trials where some j <= j_max and some cell (empty ones included) has
/// |P(A)/mu(A) - f_hat(A)| above the penalty at j.
MonteCarloReport verify_lemma_a1(const DensityModel& model, int j_max, std::size_t n, int trials,
                                 double delta, std::uint64_t base_seed = 1);

/// Trials where some j <= j_max has |V - V_hat| above the penalty at j'.
MonteCarloReport verify_vernier_deviation(const DensityModel& model, int j_max, std::size_t n, int trials,
                                          double delta, double s_n, std::uint64_t base_seed = 1);

struct VernierBoundRow {
  int j = 0;
  int j_prime = 0;
  double vernier = 0.0;            // population
  double vernier_empirical = 0.0;  // from one sample
  double penalty = 0.0;            // at j'
  double lower = 0.0;
  double upper = 0.0;
  bool sandwich_ok = false;
  bool deviation_ok = false;
};

/// Population vernier against its bounds for j in [j_lo, j_hi] at j' = j + offset,
/// plus the empirical vernier of one sample of size n.
std::vector<VernierBoundRow> verify_vernier_bounds(const DensityModel& model, int j_lo, int j_hi, int offset,
                                                   std::size_t n, std::uint64_t seed, double delta);

void write_sweep_csv(std::ostream& out, const SweepResult& result);
/// {"slope","stderr","target","points"}; slope/stderr null and a note when no fit.
std::string rate_to_json(const std::optional<RateFit>& fit, double target_exponent,
                         const std::vector<std::pair<double, double>>& points, const std::string& note);
void write_tsv(std::ostream& out, const std::vector<std::pair<double, double>>& points);

}  // namespace hauslev
