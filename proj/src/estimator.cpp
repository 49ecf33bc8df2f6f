#include "hauslev/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "hauslev/error.hpp"
#include "hauslev/format.hpp"

namespace hauslev {

std::uint64_t default_cell_budget() {
  constexpr std::uint64_t fallback = std::uint64_t{1} << 26;
  const char* env = std::getenv("HAUSLEV_CELL_BUDGET");
  if (!env || !*env) return fallback;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0' || v == 0) return fallback;
  return v;
}

std::uint64_t Histogram::count(MortonKey key) const {
  const auto it = std::lower_bound(keys.begin(), keys.end(), key);
  if (it == keys.end() || *it != key) return 0;
  return counts[it - keys.begin()];
}

std::uint64_t Histogram::max_count() const {
  std::uint64_t m = 0;
  for (auto c : counts) m = std::max(m, c);
  return m;
}

Histogram Histogram::coarsened(int levels) const {
  if (levels < 0 || levels > grid.j()) throw std::domain_error("coarsened: bad level count");
  Histogram h;
  h.grid = DyadicGrid(grid.d(), grid.j() - levels);
  h.n = n;
  const int shift = levels * grid.d();
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const MortonKey parent = keys[i] >> shift;
    if (!h.keys.empty() && h.keys.back() == parent) {
      h.counts.back() += counts[i];
    } else {
      h.keys.push_back(parent);
      h.counts.push_back(counts[i]);
    }
  }
  return h;
}

namespace {

void check_budget(const DyadicGrid& grid, std::uint64_t budget) {
  if (grid.total_cells() > budget) {
    throw ResourceError("resolution j=" + std::to_string(grid.j()) + " needs 2^" +
                        std::to_string(grid.j() * grid.d()) + " cells, over the cell budget of " +
                        std::to_string(budget));
  }
}

void check_key_range(int d, int j) {
  if (j > 31 || j * d > 63) {
    throw ResourceError("resolution j=" + std::to_string(j) + " exceeds the 64-bit cell key range for d=" +
                        std::to_string(d));
  }
}

// Keys of all samples at level j, in sample order. Coordinates are validated
// outside the parallel region so no exception crosses it.
std::vector<MortonKey> sample_keys(const SampleSet& s, int j, bool parallel) {
  check_key_range(s.d, j);
  for (double x : s.points) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("sample coordinate outside [0,1]");
  }
  const auto n = static_cast<std::int64_t>(s.n());
  const int d = s.d;
  const std::uint32_t top = (std::uint32_t{1} << j) - 1;  // j <= 31
  std::vector<MortonKey> keys(n);
  auto one = [&](std::int64_t i) {
    std::array<std::uint32_t, kMaxDim> k{};
    for (int a = 0; a < d; ++a) {
      const double v = std::floor(std::ldexp(s.points[i * d + a], j));
      k[a] = std::min(static_cast<std::uint32_t>(v), top);
    }
    keys[i] = morton_encode(k, d, j);
  };
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) one(i);
  } else {
    for (std::int64_t i = 0; i < n; ++i) one(i);
  }
  return keys;
}

Histogram run_length(const std::vector<MortonKey>& sorted, const DyadicGrid& grid, std::size_t n, int shift) {
  Histogram h;
  h.grid = grid;
  h.n = n;
  for (auto key : sorted) {
    const MortonKey k = key >> shift;
    if (!h.keys.empty() && h.keys.back() == k) {
      ++h.counts.back();
    } else {
      h.keys.push_back(k);
      h.counts.push_back(1);
    }
  }
  return h;
}

}  // namespace

Histogram build_histogram(const SampleSet& samples, int j, std::uint64_t cell_budget) {
  const DyadicGrid grid(samples.d, j);
  check_budget(grid, cell_budget);
  auto keys = sample_keys(samples, j, true);
  std::sort(keys.begin(), keys.end());
  return run_length(keys, grid, samples.n(), 0);
}

Histogram build_histogram_serial(const SampleSet& samples, int j, std::uint64_t cell_budget) {
  const DyadicGrid grid(samples.d, j);
  check_budget(grid, cell_budget);
  std::map<MortonKey, std::uint64_t> counts;
  for (std::size_t i = 0; i < samples.n(); ++i) ++counts[key_of(locate(samples.point(i), grid), grid)];
  Histogram h;
  h.grid = grid;
  h.n = samples.n();
  for (const auto& [k, c] : counts) {
    h.keys.push_back(k);
    h.counts.push_back(c);
  }
  return h;
}

SortedSample::SortedSample(const SampleSet& samples, int top_j)
    : d_(samples.d), top_(top_j), n_(samples.n()), keys_(sample_keys(samples, top_j, true)) {
  std::sort(keys_.begin(), keys_.end());
}

Histogram SortedSample::at(int j) const {
  if (j < 0 || j > top_) throw std::domain_error("SortedSample: level outside [0, top]");
  return run_length(keys_, DyadicGrid(d_, j), n_, (top_ - j) * d_);
}

GridSet plug_in_level_set(const Histogram& h, double gamma) {
  if (!(gamma > 0.0)) throw std::domain_error("plug_in_level_set: gamma must be positive");
  std::vector<MortonKey> members;
  for (std::size_t i = 0; i < h.keys.size(); ++i) {
    if (h.density(h.counts[i]) >= gamma) members.push_back(h.keys[i]);
  }
  return GridSet::from_keys(h.grid, std::move(members));
}

GridSet support_set_estimate(const Histogram& h) {
  std::vector<MortonKey> members;
  for (std::size_t i = 0; i < h.keys.size(); ++i) {
    if (h.counts[i] > 0) members.push_back(h.keys[i]);
  }
  return GridSet::from_keys(h.grid, std::move(members));
}

double penalty(const Histogram& h, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("penalty: delta must lie in (0,1)");
  if (h.n == 0) throw std::domain_error("penalty: empty histogram");
  const int d = h.grid.d();
  const int jp = h.grid.j();
  const double log_term = std::log(std::ldexp(16.0 / delta, jp * (d + 1)));
  const double t = 8.0 * log_term / (static_cast<double>(h.n) * h.grid.cell_measure());
  const double top = h.density(h.max_count());  // the empty-cell candidate is 0 <= top
  return std::sqrt(t * std::max(top, t));
}

double vernier_empirical(const Histogram& fine, int j, double gamma) {
  const int jp = fine.grid.j();
  if (j < 0 || j > jp) throw std::domain_error("vernier: need 0 <= j <= j'");
  const int d = fine.grid.d();
  const int shift = (jp - j) * d;
  const double children = std::ldexp(1.0, shift);
  const double parents = std::ldexp(1.0, j * d);
  const double empty_dev = std::abs(gamma);

  double best = std::numeric_limits<double>::infinity();
  std::size_t occupied_parents = 0;
  std::size_t i = 0;
  const std::size_t m = fine.keys.size();
  while (i < m) {
    const MortonKey parent = fine.keys[i] >> shift;
    double worst = 0.0;
    std::size_t seen = 0;
    for (; i < m && (fine.keys[i] >> shift) == parent; ++i, ++seen) {
      worst = std::max(worst, std::abs(gamma - fine.density(fine.counts[i])));
    }
    if (static_cast<double>(seen) < children) worst = std::max(worst, empty_dev);
    best = std::min(best, worst);
    ++occupied_parents;
  }
  if (static_cast<double>(occupied_parents) < parents) best = std::min(best, empty_dev);
  return best;
}

double vernier_modified(const Histogram& fine, int j, double gamma) {
  return std::pow(2.0, -0.5 * fine.grid.j()) * vernier_empirical(fine, j, gamma);
}

double vernier_bruteforce(const Histogram& fine, int j, double gamma) {
  const int jp = fine.grid.j();
  if (j < 0 || j > jp) throw std::domain_error("vernier: need 0 <= j <= j'");
  const int d = fine.grid.d();
  const DyadicGrid coarse(d, j);
  const std::uint64_t ratio = std::uint64_t{1} << (jp - j);
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t p = 0; p < coarse.total_cells(); ++p) {
    const auto pc = cell_of(p, coarse);
    std::uint64_t per_parent = 1;
    for (int a = 0; a < d; ++a) per_parent *= ratio;
    double worst = 0.0;
    for (std::uint64_t c = 0; c < per_parent; ++c) {
      CellIndex child;
      std::uint64_t rem = c;
      for (int a = 0; a < d; ++a) {
        child.k[a] = static_cast<std::uint32_t>(pc.k[a] * ratio + rem % ratio);
        rem /= ratio;
      }
      worst = std::max(worst, std::abs(gamma - fine.f_hat(child)));
    }
    best = std::min(best, worst);
  }
  return best;
}

double vernier_dense(std::span<const double> density, int d, int fine_j, int j, double gamma) {
  if (j < 0 || j > fine_j) throw std::domain_error("vernier: need 0 <= j <= j'");
  const DyadicGrid fine(d, fine_j);
  if (density.size() != fine.total_cells()) throw std::invalid_argument("vernier_dense: size mismatch");
  const std::size_t children = std::size_t{1} << ((fine_j - j) * d);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t start = 0; start < density.size(); start += children) {
    double worst = 0.0;
    for (std::size_t c = start; c < start + children; ++c) worst = std::max(worst, std::abs(gamma - density[c]));
    best = std::min(best, worst);
  }
  return best;
}

double vernier_true(const DensityModel& model, int j, int fine_offset, double gamma) {
  if (fine_offset < 0) throw std::domain_error("vernier_true: negative refinement");
  const DyadicGrid fine(model.d(), j + fine_offset);
  return vernier_dense(cell_averages(model, fine), model.d(), fine.j(), j, gamma);
}

double default_s_n(std::size_t n) {
  const double ln = static_cast<double>(n) > 1.0 ? std::log2(std::log2(static_cast<double>(n))) : 0.0;
  return std::max(2.0, ln);
}

int refinement_offset(double s_n) { return static_cast<int>(std::floor(std::log2(s_n))); }

namespace {

int resolution_rule(std::size_t n, double exponent, double s_n, bool round_nearest) {
  const double nn = static_cast<double>(n);
  const double v = std::log2(std::pow(nn / std::log(nn), exponent) / s_n);
  const double j = round_nearest ? std::round(v) : std::floor(v);
  return static_cast<int>(std::max(0.0, j));
}

void check_n(std::size_t n) {
  if (n < 2) throw std::invalid_argument("need at least 2 samples");
}

}  // namespace

int default_max_resolution(std::size_t n, int d, double s_n) {
  check_n(n);
  return resolution_rule(n, 1.0 / d, s_n, false);
}

int oracle_resolution(std::size_t n, int d, double alpha, double s_n) {
  check_n(n);
  if (!(alpha >= 0.0)) throw std::domain_error("alpha must be non-negative");
  return resolution_rule(n, 1.0 / (d + 2.0 * alpha), s_n, true);
}

int support_resolution(std::size_t n, int d, double alpha, double s_n) {
  check_n(n);
  if (!(alpha >= 0.0)) throw std::domain_error("alpha must be non-negative");
  return resolution_rule(n, 1.0 / (d + alpha), s_n, true);
}

std::string diagnostics_to_json(const SelectionDiagnostics& diag) {
  std::string out = "[";
  for (const auto& r : diag.records) {
    out += "{\"j\":" + std::to_string(r.j) + ",\"j_prime\":" + std::to_string(r.j_prime) +
           ",\"vernier\":" + json_number(r.vernier) + ",\"penalty\":" + json_number(r.penalty) +
           ",\"objective\":" + json_number(r.objective);
    if (r.epsilon) out += ",\"epsilon\":" + json_number(*r.epsilon);
    out += "},";
  }
  out += "{\"chosen_j\":" + std::to_string(diag.chosen_j) + ",\"mode\":\"" + diag.mode +
         "\",\"s_n\":" + json_number(diag.s_n) + ",\"delta\":" + json_number(diag.delta) + "}]";
  return out;
}

namespace {

struct Resolved {
  std::size_t n;
  double s_n;
  double delta;
};

Resolved resolve(const SampleSet& samples, const EstimatorConfig& config) {
  Resolved r{samples.n(), 0.0, 0.0};
  check_n(r.n);
  r.s_n = config.s_n.value_or(default_s_n(r.n));
  if (!(r.s_n >= 2.0) || !std::isfinite(r.s_n)) throw std::invalid_argument("s_n must be finite and >= 2");
  r.delta = config.delta.value_or(1.0 / static_cast<double>(r.n));
  if (!(r.delta > 0.0 && r.delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
  return r;
}

SelectionDiagnostics select_impl(const SampleSet& samples, const EstimatorConfig& config, bool parallel) {
  const auto r = resolve(samples, config);
  if (!(config.gamma > 0.0)) throw std::invalid_argument("resolution selection needs gamma > 0");
  const int d = samples.d;
  const int J = config.max_resolution.value_or(default_max_resolution(r.n, d, r.s_n));
  if (J < 0) throw std::invalid_argument("maximum resolution must be non-negative");
  const int offset = refinement_offset(r.s_n);
  const int top = J + offset;
  check_key_range(d, top);
  double enumerable = 0.0;
  for (int j = 0; j <= J; ++j) enumerable += std::ldexp(1.0, (j + offset) * d);
  if (enumerable > static_cast<double>(config.cell_budget)) {
    throw ResourceError("selection up to j'=" + std::to_string(top) + " enumerates " + fmt17(enumerable) +
                        " cells, over the cell budget of " + std::to_string(config.cell_budget));
  }
  const bool annotate = config.model_c1 && config.model_alpha && *config.model_alpha > 0.0 && *config.model_c1 > 0.0;

  const SortedSample sorted(samples, top);
  SelectionDiagnostics diag;
  diag.mode = "adaptive";
  diag.s_n = r.s_n;
  diag.delta = r.delta;
  diag.records.resize(J + 1);
  auto one = [&](int j) {
    SelectionRecord& rec = diag.records[j];
    rec.j = j;
    rec.j_prime = j + offset;
    const Histogram fine = sorted.at(rec.j_prime);
    rec.vernier = vernier_empirical(fine, j, config.gamma);
    rec.penalty = penalty(fine, r.delta);
    if (config.jump_mode) {
      const double scale = std::pow(2.0, -0.5 * rec.j_prime);
      rec.vernier *= scale;
      rec.penalty *= scale;
    }
    rec.objective = rec.vernier + rec.penalty;
    if (annotate) {
      const double psi_j = penalty(sorted.at(j), r.delta);
      rec.epsilon = std::pow(psi_j / *config.model_c1, 1.0 / *config.model_alpha) +
                    std::sqrt(static_cast<double>(d)) * std::ldexp(1.0, -j);
    }
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (int j = 0; j <= J; ++j) one(j);
  } else {
    for (int j = 0; j <= J; ++j) one(j);
  }
  int chosen = 0;
  for (int j = 1; j <= J; ++j) {
    if (diag.records[j].objective < diag.records[chosen].objective) chosen = j;
  }
  diag.chosen_j = chosen;
  return diag;
}

}  // namespace

SelectionDiagnostics select_resolution(const SampleSet& samples, const EstimatorConfig& config) {
  return select_impl(samples, config, true);
}

SelectionDiagnostics select_resolution_serial(const SampleSet& samples, const EstimatorConfig& config) {
  return select_impl(samples, config, false);
}

Estimate estimate(const SampleSet& samples, const EstimatorConfig& config) {
  const auto r = resolve(samples, config);
  if (!(config.gamma >= 0.0)) throw std::invalid_argument("gamma must be non-negative");
  Estimate out;
  auto& diag = out.diagnostics;
  if (config.gamma == 0.0) {
    diag.mode = "support";
    diag.chosen_j = config.fixed_j.value_or(support_resolution(r.n, samples.d, config.alpha.value_or(1.0), r.s_n));
  } else if (config.fixed_j) {
    diag.mode = "fixed";
    diag.chosen_j = *config.fixed_j;
  } else if (config.alpha) {
    diag.mode = "oracle";
    diag.chosen_j = oracle_resolution(r.n, samples.d, *config.alpha, r.s_n);
  } else {
    diag = select_resolution(samples, config);
  }
  diag.s_n = r.s_n;
  diag.delta = r.delta;
  if (diag.chosen_j < 0) throw std::invalid_argument("resolution must be non-negative");
  check_key_range(samples.d, diag.chosen_j);
  const Histogram h = build_histogram(samples, diag.chosen_j, config.cell_budget);
  out.set = config.gamma == 0.0 ? support_set_estimate(h) : plug_in_level_set(h, config.gamma);
  return out;
}

}  // namespace hauslev
