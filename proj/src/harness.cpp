#include "hauslev/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "hauslev/error.hpp"
#include "hauslev/format.hpp"
#include "hauslev/grid.hpp"

namespace hauslev {

std::string to_string(Method m) {
  switch (m) {
    case Method::adaptive: return "adaptive";
    case Method::oracle: return "oracle";
    case Method::fixed_j: return "fixed-j";
    case Method::support: return "support";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "adaptive") return Method::adaptive;
  if (name == "oracle") return Method::oracle;
  if (name == "fixed-j" || name == "fixed_j" || name == "fixed") return Method::fixed_j;
  if (name == "support") return Method::support;
  throw std::invalid_argument("unknown method '" + name + "'");
}

void validate(const SweepPlan& plan) {
  if (plan.n_grid.empty()) throw std::invalid_argument("n_grid must not be empty");
  for (std::size_t i = 0; i < plan.n_grid.size(); ++i) {
    if (plan.n_grid[i] < 2) throw std::invalid_argument("n_grid entries must be at least 2");
    if (i > 0 && plan.n_grid[i] <= plan.n_grid[i - 1]) throw std::invalid_argument("n_grid must be strictly increasing");
  }
  if (plan.replications < 1) throw std::invalid_argument("replications must be at least 1");
  if (plan.method == Method::fixed_j && !plan.fixed_j) throw std::invalid_argument("method fixed-j needs j");
  if (plan.fixed_j && *plan.fixed_j < 0) throw std::invalid_argument("j must be non-negative");
  if (plan.j_ref && *plan.j_ref < 0) throw std::invalid_argument("j_ref must be non-negative");
  if (!plan.hausdorff_loss && !plan.symdiff_loss) throw std::invalid_argument("no loss selected");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double log_scale(std::size_t n) {
  const double x = static_cast<double>(n);
  return std::log(x / std::log(x));
}

}  // namespace

std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t n, int rep) {
  return base_seed ^ splitmix64(splitmix64(static_cast<std::uint64_t>(n)) ^ static_cast<std::uint64_t>(rep));
}

double level_set_exponent(int d, double alpha) { return -1.0 / (d + 2.0 * alpha); }
double support_exponent(int d, double alpha) { return -1.0 / (d + alpha); }

SweepResult run_sweep(const SweepPlan& plan) {
  validate(plan);
  const DensityModel model = make_model(plan.model);
  const int d = model.d();
  const double alpha = plan.alpha.value_or(model.alpha());

  EstimatorConfig base;
  base.delta = plan.delta;
  base.s_n = plan.s_n;
  base.max_resolution = plan.max_resolution;
  base.jump_mode = plan.jump_mode;
  switch (plan.method) {
    case Method::adaptive:
      base.gamma = model.gamma();
      break;
    case Method::oracle:
      base.gamma = model.gamma();
      base.alpha = alpha;
      break;
    case Method::fixed_j:
      base.gamma = model.gamma();
      base.fixed_j = plan.fixed_j;
      break;
    case Method::support:
      base.gamma = 0.0;
      base.alpha = alpha;
      base.fixed_j = plan.fixed_j;
      break;
  }
  if (plan.method != Method::support && !(base.gamma > 0.0)) {
    throw std::invalid_argument("level-set methods need a model with gamma > 0 (use method = support)");
  }

  const int reps = plan.replications;
  const auto jobs = static_cast<std::int64_t>(plan.n_grid.size()) * reps;
  SweepResult result;
  result.rows.resize(jobs);
  result.target_exponent = plan.method == Method::support ? support_exponent(d, alpha) : level_set_exponent(d, alpha);
  std::vector<GridSet> estimates(jobs, GridSet(DyadicGrid(d, 0)));
  std::vector<std::string> errors(jobs);

  using clock = std::chrono::steady_clock;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t job = 0; job < jobs; ++job) {
    const std::size_t n = plan.n_grid[job / reps];
    const int rep = static_cast<int>(job % reps);
    SweepRow& row = result.rows[job];
    row.n = n;
    row.rep = rep;
    row.method = plan.method;
    try {
      const auto start = clock::now();
      const SampleSet s = sample(model, n, replication_seed(plan.base_seed, n, rep));
      Estimate est = estimate(s, base);
      row.j_hat = est.diagnostics.chosen_j;
      estimates[job] = std::move(est.set);
      if (plan.timing) row.seconds = std::chrono::duration<double>(clock::now() - start).count();
    } catch (const ResourceError& e) {
      errors[job] = std::string("R") + e.what();
    } catch (const std::exception& e) {
      errors[job] = std::string("E") + e.what();
    }
  }
  for (std::int64_t job = 0; job < jobs; ++job) {
    if (errors[job].empty()) continue;
    const std::string where = " (n=" + std::to_string(result.rows[job].n) + ", rep=" +
                              std::to_string(result.rows[job].rep) + ")";
    if (errors[job][0] == 'R') throw ResourceError(errors[job].substr(1) + where);
    throw std::runtime_error(errors[job].substr(1) + where);
  }

  int max_j = 0;
  for (const auto& r : result.rows) max_j = std::max(max_j, r.j_hat);
  result.j_ref = plan.j_ref.value_or(max_j + 3);
  if (result.j_ref < max_j + 2) {
    throw std::invalid_argument("j_ref=" + std::to_string(result.j_ref) + " is below max j_hat + 2 = " +
                                std::to_string(max_j + 2));
  }
  const GridSet truth = true_level_set(model, result.j_ref);
  const double bias = std::sqrt(static_cast<double>(d)) * std::ldexp(1.0, -result.j_ref);

  for (std::int64_t job = 0; job < jobs; ++job) {
    SweepRow& row = result.rows[job];
    const auto start = clock::now();
    if (plan.hausdorff_loss) row.hausdorff = hausdorff(estimates[job], truth);
    if (plan.symdiff_loss) row.symdiff = symmetric_difference_measure(estimates[job], truth);
    row.raster_bias = bias;
    if (plan.timing) row.seconds += std::chrono::duration<double>(clock::now() - start).count();
  }
  return result;
}

RateFit fit_line(std::vector<std::pair<double, double>> points) {
  const std::size_t m = points.size();
  if (m < 3) throw std::runtime_error("fit needs at least 3 points, have " + std::to_string(m));
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (!(sxx > 0.0)) throw std::runtime_error("fit needs at least two distinct abscissae");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (const auto& [x, y] : points) {
    const double r = y - fit.intercept - fit.slope * x;
    ssr += r * r;
  }
  fit.slope_stderr = std::sqrt(ssr / static_cast<double>(m - 2) / sxx);
  fit.points = std::move(points);
  return fit;
}

RateFit fit_rate(const std::vector<std::pair<std::size_t, double>>& mean_loss, double target_exponent) {
  std::vector<std::pair<double, double>> pts;
  std::vector<std::string> warnings;
  for (const auto& [n, loss] : mean_loss) {
    if (n < 3) throw std::invalid_argument("fit_rate: n must be at least 3");
    if (!(loss > 0.0)) {
      warnings.push_back("dropped n=" + std::to_string(n) + ": mean loss is zero");
      continue;
    }
    pts.push_back({log_scale(n), std::log(loss)});
  }
  if (pts.size() < 4) {
    throw std::runtime_error("fit_rate: need at least 4 points with positive loss, have " + std::to_string(pts.size()));
  }
  RateFit fit = fit_line(std::move(pts));
  fit.target_exponent = target_exponent;
  fit.warnings = std::move(warnings);
  return fit;
}

std::vector<std::pair<std::size_t, double>> mean_hausdorff_by_n(const SweepResult& result) {
  std::map<std::size_t, std::pair<double, int>> acc;
  for (const auto& r : result.rows) {
    if (!r.hausdorff) throw std::invalid_argument("sweep has no Hausdorff losses");
    acc[r.n].first += *r.hausdorff;
    ++acc[r.n].second;
  }
  std::vector<std::pair<std::size_t, double>> out;
  for (const auto& [n, s] : acc) out.push_back({n, s.first / s.second});
  return out;
}

std::vector<std::pair<std::size_t, double>> median_cell_side_by_n(const SweepResult& result) {
  std::map<std::size_t, std::vector<double>> acc;
  for (const auto& r : result.rows) acc[r.n].push_back(std::ldexp(1.0, -r.j_hat));
  std::vector<std::pair<std::size_t, double>> out;
  for (auto& [n, v] : acc) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    out.push_back({n, m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2])});
  }
  return out;
}

RateFit fit_rate(const SweepResult& result, double target_exponent) {
  return fit_rate(mean_hausdorff_by_n(result), target_exponent);
}

RateFit fit_resolution_rate(const SweepResult& result, double target_exponent) {
  std::map<std::size_t, std::pair<double, int>> acc;
  for (const auto& r : result.rows) {
    acc[r.n].first += -r.j_hat * std::log(2.0);
    ++acc[r.n].second;
  }
  std::vector<std::pair<double, double>> pts;
  for (const auto& [n, s] : acc) pts.push_back({log_scale(n), s.first / s.second});
  if (pts.size() < 4) throw std::runtime_error("resolution fit: need at least 4 distinct n");
  RateFit fit = fit_line(std::move(pts));
  fit.target_exponent = target_exponent;
  return fit;
}

namespace {

// Dense cell averages at levels 0..top, computed once per model.
std::vector<std::vector<double>> averages_up_to(const DensityModel& model, int top) {
  std::vector<std::vector<double>> out;
  for (int j = 0; j <= top; ++j) out.push_back(cell_averages(model, DyadicGrid(model.d(), j)));
  return out;
}

double max_deviation(const Histogram& h, const std::vector<double>& fbar) {
  double worst = 0.0;
  std::size_t i = 0;
  for (MortonKey k = 0; k < fbar.size(); ++k) {
    std::uint64_t c = 0;
    if (i < h.keys.size() && h.keys[i] == k) c = h.counts[i++];
    worst = std::max(worst, std::abs(fbar[k] - h.density(c)));
  }
  return worst;
}

template <typename Trial>
MonteCarloReport run_trials(int trials, Trial&& trial) {
  MonteCarloReport r;
  r.trials = trials;
  int violations = 0;
#pragma omp parallel for schedule(dynamic, 1) reduction(+ : violations)
  for (int t = 0; t < trials; ++t) violations += trial(t) ? 1 : 0;
  r.violations = violations;
  return r;
}

}  // namespace

MonteCarloReport verify_lemma_a1(const DensityModel& model, int j_max, std::size_t n, int trials, double delta,
                                 std::uint64_t base_seed) {
  if (j_max < 0 || trials < 1) throw std::invalid_argument("verify_lemma_a1: bad arguments");
  const auto fbar = averages_up_to(model, j_max);
  return run_trials(trials, [&](int t) {
    const SampleSet s = sample(model, n, replication_seed(base_seed, n, t));
    const SortedSample sorted(s, j_max);
    for (int j = 0; j <= j_max; ++j) {
      const Histogram h = sorted.at(j);
      if (max_deviation(h, fbar[j]) > penalty(h, delta)) return true;
    }
    return false;
  });
}

MonteCarloReport verify_vernier_deviation(const DensityModel& model, int j_max, std::size_t n, int trials,
                                          double delta, double s_n, std::uint64_t base_seed) {
  if (j_max < 0 || trials < 1) throw std::invalid_argument("verify_vernier_deviation: bad arguments");
  const int offset = refinement_offset(s_n);
  const int top = j_max + offset;
  const auto fbar = averages_up_to(model, top);
  const double gamma = model.gamma();
  std::vector<double> truth(j_max + 1);
  for (int j = 0; j <= j_max; ++j) truth[j] = vernier_dense(fbar[j + offset], model.d(), j + offset, j, gamma);
  return run_trials(trials, [&](int t) {
    const SampleSet s = sample(model, n, replication_seed(base_seed, n, t));
    const SortedSample sorted(s, top);
    for (int j = 0; j <= j_max; ++j) {
      const Histogram fine = sorted.at(j + offset);
      if (std::abs(truth[j] - vernier_empirical(fine, j, gamma)) > penalty(fine, delta)) return true;
    }
    return false;
  });
}

std::vector<VernierBoundRow> verify_vernier_bounds(const DensityModel& model, int j_lo, int j_hi, int offset,
                                                   std::size_t n, std::uint64_t seed, double delta) {
  if (j_lo < 0 || j_hi < j_lo || offset < 0) throw std::invalid_argument("verify_vernier_bounds: bad range");
  const auto& c = model.constants();
  const double alpha = model.alpha();
  const int d = model.d();
  const double gamma = model.gamma();
  const SampleSet s = sample(model, n, seed);
  const SortedSample sorted(s, j_hi + offset);
  std::vector<VernierBoundRow> rows;
  for (int j = j_lo; j <= j_hi; ++j) {
    VernierBoundRow r;
    r.j = j;
    r.j_prime = j + offset;
    r.vernier = vernier_true(model, j, offset, gamma);
    const Histogram fine = sorted.at(r.j_prime);
    r.vernier_empirical = vernier_empirical(fine, j, gamma);
    r.penalty = penalty(fine, delta);
    r.lower = std::min(c.delta1, c.c1) * std::pow(2.0, -r.j_prime * alpha);
    r.upper = c.sandwich_c * std::pow(std::sqrt(static_cast<double>(d)) * std::ldexp(1.0, -j), alpha);
    r.sandwich_ok = r.lower <= r.vernier && r.vernier <= r.upper;
    r.deviation_ok = std::abs(r.vernier - r.vernier_empirical) <= r.penalty;
    rows.push_back(r);
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << "n,rep,method,j_hat,hausdorff,symdiff,raster_bias,seconds\n";
  for (const auto& r : result.rows) {
    out << r.n << ',' << r.rep << ',' << to_string(r.method) << ',' << r.j_hat << ','
        << (r.hausdorff ? fmt17(*r.hausdorff) : "") << ',' << (r.symdiff ? fmt17(*r.symdiff) : "") << ','
        << fmt17(r.raster_bias) << ',' << fmt17(r.seconds) << '\n';
  }
}

std::string rate_to_json(const std::optional<RateFit>& fit, double target_exponent,
                         const std::vector<std::pair<double, double>>& points, const std::string& note) {
  std::string out = "{\"slope\":" + (fit ? json_number(fit->slope) : std::string("null")) +
                    ",\"stderr\":" + (fit ? json_number(fit->slope_stderr) : std::string("null")) +
                    ",\"target\":" + json_number(target_exponent) + ",\"points\":[";
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i) out += ',';
    out += "[" + json_number(points[i].first) + "," + json_number(points[i].second) + "]";
  }
  out += "]";
  if (fit && !fit->warnings.empty()) {
    out += ",\"warnings\":[";
    for (std::size_t i = 0; i < fit->warnings.size(); ++i) {
      if (i) out += ',';
      out += nlohmann::json(fit->warnings[i]).dump();
    }
    out += "]";
  }
  if (!note.empty()) out += ",\"note\":" + nlohmann::json(note).dump();
  out += "}";
  return out;
}

void write_tsv(std::ostream& out, const std::vector<std::pair<double, double>>& points) {
  for (const auto& [x, y] : points) out << fmt17(x) << '\t' << fmt17(y) << '\n';
}

}  // namespace hauslev
