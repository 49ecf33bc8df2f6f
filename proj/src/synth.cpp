#include "hauslev/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "hauslev/error.hpp"
#include "hauslev/quadrature.hpp"
#include "hauslev/format.hpp"
#include "hauslev/parallel.hpp"

namespace hauslev {

std::string to_string(Shape s) {
  switch (s) {
    case Shape::interval: return "interval";
    case Shape::ball: return "ball";
    case Shape::two_component: return "two-component";
    case Shape::uniform: return "uniform";
    case Shape::ribbon: return "ribbon";
  }
  return "?";
}

Shape parse_shape(const std::string& name) {
  if (name == "interval") return Shape::interval;
  if (name == "ball") return Shape::ball;
  if (name == "two-component" || name == "two_component") return Shape::two_component;
  if (name == "uniform") return Shape::uniform;
  if (name == "ribbon") return Shape::ribbon;
  throw std::invalid_argument("unknown shape '" + name + "'");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double unit_ball_volume(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return std::numbers::pi;
    default: return 4.0 * std::numbers::pi / 3.0;
  }
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Integral over one radial band of a sphere of radius R of u^alpha, where u is
// the distance to the sphere and runs over [0, rc], on the inward (sign -1)
// or outward (sign +1) side.
double radial_band(int d, double radius, double rc, double alpha, int sign) {
  const double surface = d * unit_ball_volume(d);
  double s = 0.0;
  for (int k = 0; k <= d - 1; ++k) {
    s += binomial(d - 1, k) * std::pow(radius, d - 1 - k) * std::pow(sign, k) *
         std::pow(rc, alpha + k + 1) / (alpha + k + 1);
  }
  return surface * s;
}

[[noreturn]] void fail(const std::string& msg) { throw ConstructionError("make_model: " + msg); }

}  // namespace

bool DensityModel::inside_unchecked(const double* x) const {
  if (slab_like()) {
    const double y = x[spec_.d - 1];
    for (const auto& [lo, hi] : intervals_) {
      if (y >= lo && y <= hi) return true;
    }
    return false;
  }
  for (const auto& b : balls_) {
    double s = 0.0;
    for (int i = 0; i < spec_.d; ++i) s += (x[i] - b.center[i]) * (x[i] - b.center[i]);
    if (std::sqrt(s) <= b.radius) return true;
  }
  return false;
}

bool DensityModel::inside(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != spec_.d) throw std::domain_error("point dimension mismatch");
  return inside_unchecked(x.data());
}

double DensityModel::boundary_distance_unchecked(const double* x) const {
  double best = kInf;
  if (slab_like()) {
    const double y = x[spec_.d - 1];
    for (double b : boundary_points_) best = std::min(best, std::abs(y - b));
    return best;
  }
  for (const auto& b : balls_) {
    double s = 0.0;
    for (int i = 0; i < spec_.d; ++i) s += (x[i] - b.center[i]) * (x[i] - b.center[i]);
    best = std::min(best, std::abs(std::sqrt(s) - b.radius));
  }
  return best;
}

double DensityModel::density_unchecked(const double* x) const {
  if (spec_.shape == Shape::uniform) return 1.0;
  const bool in = inside_unchecked(x);
  const double prof = std::pow(std::min(boundary_distance_unchecked(x), r_cap_), spec_.alpha);
  if (spec_.support) return in ? amp_ * prof : 0.0;
  return in ? gamma_ + amp_ * prof : gamma_ - amp_ * prof;
}

double DensityModel::slab_integral(double lo, double hi) const {
  if (!(lo < hi)) return 0.0;
  const double rc = r_cap_;
  const double alpha = spec_.alpha;
  std::vector<double> cuts{lo, hi};
  auto add = [&](double t) {
    if (t > lo && t < hi) cuts.push_back(t);
  };
  const auto& bp = boundary_points_;
  for (double b : bp) {
    add(b);
    add(b - rc);
    add(b + rc);
  }
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) add(0.5 * (bp[i] + bp[i + 1]));
  std::sort(cuts.begin(), cuts.end());

  const double capped = std::pow(rc, alpha);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double p = cuts[i];
    const double q = cuts[i + 1];
    if (!(p < q)) continue;
    double mid = 0.5 * (p + q);
    // Only the last coordinate matters; reuse the point-wise predicates.
    std::array<double, kMaxDim> probe{};
    probe[spec_.d - 1] = mid;
    const bool in = inside_unchecked(probe.data());
    const double weight = spec_.support ? (in ? 1.0 : 0.0) : (in ? 1.0 : -1.0);
    if (weight == 0.0) continue;
    double nearest = kInf;
    double b_near = 0.0;
    for (double b : bp) {
      if (std::abs(mid - b) < nearest) {
        nearest = std::abs(mid - b);
        b_near = b;
      }
    }
    double piece;
    if (nearest >= rc) {
      piece = capped * (q - p);
    } else if (mid > b_near) {
      piece = (std::pow(q - b_near, alpha + 1) - std::pow(p - b_near, alpha + 1)) / (alpha + 1);
    } else {
      piece = (std::pow(b_near - p, alpha + 1) - std::pow(b_near - q, alpha + 1)) / (alpha + 1);
    }
    total += weight * piece;
  }
  return total;
}

DensityModel make_model(const ModelSpec& spec) {
  if (spec.d < 1 || spec.d > kMaxDim) fail("d must be 1, 2 or 3");
  if (!(spec.alpha >= 0.0) || !std::isfinite(spec.alpha)) fail("alpha must be finite and >= 0");
  if (!(spec.contrast > 0.0 && spec.contrast <= 1.0)) fail("contrast must lie in (0, 1]");
  if (!(spec.cap_fraction > 0.0 && spec.cap_fraction <= 1.0)) fail("cap_fraction must lie in (0, 1]");

  DensityModel m;
  m.spec_ = spec;
  const int d = spec.d;
  Shape shape = spec.shape;
  const auto& geo = spec.geometry;

  // Defaults and ball-to-interval folding in one dimension.
  bool balls = false;
  switch (shape) {
    case Shape::uniform:
      m.intervals_ = {{0.0, 1.0}};
      break;
    case Shape::interval:
      if (geo.empty()) m.intervals_ = {{1.0 / 3.0, 1.0}};
      break;
    case Shape::ribbon:
      if (d < 2) fail("ribbon needs d >= 2");
      if (geo.empty()) m.intervals_ = {{0.5 + std::ldexp(1.0, -8), 0.5 + 3 * std::ldexp(1.0, -8)}};
      break;
    case Shape::ball:
      if (d == 1) {
        if (geo.empty()) {
          m.intervals_ = {{0.2, 0.8}};
        } else if (geo.size() == 2) {
          m.intervals_ = {{geo[0] - geo[1], geo[0] + geo[1]}};
        } else {
          fail("ball geometry in d=1 is center,radius");
        }
      } else {
        balls = true;
      }
      break;
    case Shape::two_component:
      if (d == 1) {
        if (geo.empty()) m.intervals_ = {{0.1, 0.3}, {0.55, 0.9}};
      } else {
        balls = true;
      }
      break;
  }
  if (m.intervals_.empty() && !balls) {
    if (geo.size() < 2 || geo.size() % 2 != 0) fail("interval geometry needs lo,hi pairs");
    for (std::size_t i = 0; i < geo.size(); i += 2) m.intervals_.push_back({geo[i], geo[i + 1]});
  }
  if (balls) {
    if (geo.empty()) {
      DensityModel::Ball b;
      if (shape == Shape::ball) {
        b.center.fill(0.0);
        for (int i = 0; i < d; ++i) b.center[i] = 0.5;
        b.radius = 0.3;
        m.balls_.push_back(b);
      } else {
        for (double c : {0.3, 0.7}) {
          for (int i = 0; i < d; ++i) b.center[i] = c;
          b.radius = 0.12;
          m.balls_.push_back(b);
        }
      }
    } else {
      const std::size_t stride = static_cast<std::size_t>(d) + 1;
      if (geo.size() % stride != 0) fail("ball geometry needs d center coordinates and a radius per ball");
      for (std::size_t i = 0; i < geo.size(); i += stride) {
        DensityModel::Ball b;
        for (int k = 0; k < d; ++k) b.center[k] = geo[i + k];
        b.radius = geo[i + d];
        m.balls_.push_back(b);
      }
    }
    if (shape == Shape::two_component && m.balls_.size() != 2) fail("two-component needs two balls");
  }
  if (shape == Shape::two_component && !balls && m.intervals_.size() != 2) {
    fail("two-component needs two intervals");
  }

  // Geometry checks and inradius.
  double inradius = kInf;
  if (!balls) {
    std::sort(m.intervals_.begin(), m.intervals_.end());
    for (std::size_t i = 0; i < m.intervals_.size(); ++i) {
      const auto [lo, hi] = m.intervals_[i];
      if (!(lo >= 0.0 && hi <= 1.0 && lo < hi)) fail("intervals must satisfy 0 <= lo < hi <= 1");
      if (i > 0 && !(lo > m.intervals_[i - 1].second)) fail("intervals must be disjoint");
      const bool touches = lo == 0.0 || hi == 1.0;
      if (lo > 0.0) m.boundary_points_.push_back(lo);
      if (hi < 1.0) m.boundary_points_.push_back(hi);
      inradius = std::min(inradius, touches ? hi - lo : 0.5 * (hi - lo));
    }
    if (shape != Shape::uniform && m.boundary_points_.empty()) {
      fail("the region covers the whole domain; use shape=uniform");
    }
  } else {
    for (const auto& b : m.balls_) {
      if (!(b.radius > 0.0)) fail("ball radius must be positive");
      inradius = std::min(inradius, b.radius);
    }
  }
  m.r_cap_ = shape == Shape::uniform ? 0.5 : spec.cap_fraction * inradius;
  const double rc = m.r_cap_;

  if (balls) {
    for (const auto& b : m.balls_) {
      for (int i = 0; i < d; ++i) {
        if (b.center[i] - b.radius - rc < 0.0 || b.center[i] + b.radius + rc > 1.0) {
          fail("ball plus its capped shell must lie inside the unit cube");
        }
      }
    }
  }
  // Components separated by at least 4 eps_o, with eps_o = r_cap.
  if (balls && m.balls_.size() > 1) {
    for (std::size_t a = 0; a < m.balls_.size(); ++a) {
      for (std::size_t b = a + 1; b < m.balls_.size(); ++b) {
        double s = 0.0;
        for (int i = 0; i < d; ++i) {
          const double diff = m.balls_[a].center[i] - m.balls_[b].center[i];
          s += diff * diff;
        }
        if (std::sqrt(s) - m.balls_[a].radius - m.balls_[b].radius < 4.0 * rc) {
          fail("components closer than 4 * r_cap");
        }
      }
    }
  }
  if (!balls && m.intervals_.size() > 1) {
    for (std::size_t i = 1; i < m.intervals_.size(); ++i) {
      if (m.intervals_[i].first - m.intervals_[i - 1].second < 4.0 * rc) {
        fail("components closer than 4 * r_cap");
      }
    }
  }

  // Profile integral in closed form.
  const double alpha = spec.alpha;
  const double capped = std::pow(rc, alpha);
  if (shape == Shape::uniform) {
    m.profile_integral_ = 0.0;
  } else if (!balls) {
    m.profile_integral_ = m.slab_integral(0.0, 1.0);
  } else {
    const double vd = unit_ball_volume(d);
    double inner = 0.0;
    double shells = 0.0;
    double shell_volume = 0.0;
    for (const auto& b : m.balls_) {
      inner += capped * vd * std::pow(b.radius - rc, d) + radial_band(d, b.radius, rc, alpha, -1);
      shells += radial_band(d, b.radius, rc, alpha, +1);
      shell_volume += vd * std::pow(b.radius + rc, d);
    }
    m.profile_integral_ = spec.support ? inner : inner - shells - capped * (1.0 - shell_volume);
  }
  const double I = m.profile_integral_;

  // Normalization.
  if (spec.support) {
    if (shape == Shape::uniform) fail("support model needs a proper region");
    if (spec.gamma && *spec.gamma != 0.0) fail("support models have level 0");
    m.gamma_ = 0.0;
    m.amp_ = 1.0 / I;
    m.f_max_ = m.amp_ * capped;
    m.f_min_ = 0.0;
  } else if (shape == Shape::uniform) {
    if (spec.gamma && *spec.gamma != 1.0) {
      fail("infeasible normalization: the uniform density only has level 1");
    }
    m.gamma_ = 1.0;
    m.amp_ = 0.0;
    m.f_max_ = m.f_min_ = 1.0;
  } else {
    const double kappa = spec.contrast;
    if (spec.gamma) {
      const double g = *spec.gamma;
      if (!(g > 0.0)) fail("gamma must be positive (use support=true for level 0)");
      if (std::abs(I) <= 1e-12) {
        if (std::abs(g - 1.0) > 1e-12) {
          fail("infeasible normalization: the profile integrates to zero for this shape, so gamma must be 1 (got " +
               fmt17(g) + ")");
        }
        m.gamma_ = 1.0;
        m.amp_ = kappa / capped;
      } else {
        m.gamma_ = g;
        m.amp_ = (1.0 - g) / I;
        if (!(m.amp_ > 0.0)) {
          fail("infeasible normalization: gamma=" + fmt17(g) + " needs amplitude " + fmt17(m.amp_) +
               " <= 0 (profile integral " + fmt17(I) + ")");
        }
        if (g - m.amp_ * capped < 0.0) {
          fail("infeasible normalization: gamma=" + fmt17(g) + " drives the density negative (minimum " +
               fmt17(g - m.amp_ * capped) + ")");
        }
      }
    } else {
      const double denom = 1.0 + kappa * I / capped;
      if (!(denom > 0.0)) fail("infeasible normalization under the contrast rule");
      m.gamma_ = 1.0 / denom;
      m.amp_ = kappa * m.gamma_ / capped;
    }
    m.f_max_ = m.gamma_ + m.amp_ * capped;
    m.f_min_ = m.gamma_ - m.amp_ * capped;
  }

  auto& c = m.constants_;
  c.c1 = c.c2 = m.amp_;
  c.delta1 = 0.5 * m.amp_ * capped;
  c.delta2 = rc;
  c.eps_o = rc;
  c.sandwich_c = std::max(c.c2, m.f_max_ / std::pow(rc, alpha));
  c.has_boundary = shape != Shape::uniform;
  c.x0.fill(0.0);
  if (balls) {
    c.x0 = m.balls_.front().center;
    c.x0[0] += m.balls_.front().radius;
  } else if (!m.boundary_points_.empty()) {
    for (int i = 0; i < d; ++i) c.x0[i] = 0.5;
    c.x0[d - 1] = m.boundary_points_.front();
  }
  return m;
}

namespace {

void check_point(std::span<const double> p, int d) {
  if (static_cast<int>(p.size()) != d) throw std::domain_error("point dimension mismatch");
  for (double x : p) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("point outside [0,1]^d");
  }
}

bool member(const DensityModel& m, const double* x) {
  const double f = m.density_unchecked(x);
  return m.is_support() ? f > 0.0 : f >= m.gamma();
}

GridSet rasterize(const DensityModel& model, int j, bool parallel) {
  const DyadicGrid grid(model.d(), j);
  if (grid.total_cells() > (std::uint64_t{1} << 26)) {
    throw ResourceError("true_level_set: 2^" + std::to_string(j * model.d()) + " cells exceed the 2^26 budget");
  }
  const auto total = static_cast<std::int64_t>(grid.total_cells());
  const int chunks = parallel ? std::max(1, max_threads()) : 1;
  std::vector<std::vector<MortonKey>> parts(chunks);
  auto work = [&](int c) {
    const std::int64_t begin = total * c / chunks;
    const std::int64_t end = total * (c + 1) / chunks;
    auto& out = parts[c];
    for (std::int64_t key = begin; key < end; ++key) {
      const auto x = center(cell_of(static_cast<MortonKey>(key), grid), grid);
      if (member(model, x.data())) out.push_back(static_cast<MortonKey>(key));
    }
  };
  if (parallel) {
#pragma omp parallel for schedule(static, 1)
    for (int c = 0; c < chunks; ++c) work(c);
  } else {
    work(0);
  }
  std::vector<MortonKey> keys;
  for (auto& p : parts) keys.insert(keys.end(), p.begin(), p.end());
  return GridSet::from_keys(grid, std::move(keys));
}

// Radial profile of one ball, shifted so it vanishes beyond the capped shell:
// level-set models use r_cap^alpha + sign * min(rho, r_cap)^alpha, support
// models min(rho, r_cap)^alpha inside the ball only.
double ball_profile(double r, double radius, double rc, double alpha, bool support) {
  if (r <= radius) {
    const double inner = std::pow(std::min(radius - r, rc), alpha);
    return support ? inner : std::pow(rc, alpha) + inner;
  }
  if (support || r >= radius + rc) return 0.0;
  return std::pow(rc, alpha) - std::pow(r - radius, alpha);
}

}  // namespace

double density_at(const DensityModel& model, std::span<const double> point) {
  check_point(point, model.d());
  return model.density_unchecked(point.data());
}

double boundary_distance(const DensityModel& model, std::span<const double> point) {
  check_point(point, model.d());
  return model.boundary_distance_unchecked(point.data());
}

GridSet true_level_set(const DensityModel& model, int j) { return rasterize(model, j, true); }
GridSet true_level_set_serial(const DensityModel& model, int j) { return rasterize(model, j, false); }

double cell_mass(const DensityModel& model, const CellIndex& cell, const DyadicGrid& grid) {
  if (grid.d() != model.d()) throw std::domain_error("cell_mass: dimension mismatch");
  if (!is_valid(cell, grid)) throw std::domain_error("cell_mass: cell outside grid");
  const double h = grid.sidelength();
  const int d = model.d();
  if (model.balls().empty()) {
    const double lo = cell.k[d - 1] * h;
    const double cross = std::pow(h, d - 1);
    const double base = model.is_support() ? 0.0 : model.gamma() * h;
    return cross * (base + model.amplitude() * model.slab_integral(lo, lo + h));
  }
  // The shells are disjoint, so the profile is a sum of per-ball radial terms
  // on top of a constant floor.
  const double mu = grid.cell_measure();
  const double rc = model.r_cap();
  const double alpha = model.alpha();
  const bool support = model.is_support();
  double value = support ? 0.0 : (model.gamma() - model.amplitude() * std::pow(rc, alpha)) * mu;
  double error = 0.0;
  const double budget = model.integral_tolerance() * model.f_max() * mu;
  for (const auto& b : model.balls()) {
    std::array<double, kMaxDim> lo{}, hi{};
    for (int i = 0; i < d; ++i) {
      lo[i] = cell.k[i] * h - b.center[i];
      hi[i] = lo[i] + h;
    }
    const double outer = support ? b.radius : b.radius + rc;
    const std::array<double, 3> breaks{b.radius - rc, b.radius, b.radius + rc};
    const QuadResult q = radial_box_integral(
        d, [&](double r) { return ball_profile(r, b.radius, rc, alpha, support); }, outer, breaks, lo.data(),
        hi.data(), 1e-3 * budget / model.amplitude());
    value += model.amplitude() * q.value;
    error += model.amplitude() * q.error;
  }
  // Unconverged pieces still carry their last-level difference as the estimate.
  if (error > budget) {
    throw NumericError("cell_mass: quadrature error estimate " + fmt17(error) + " exceeds tolerance");
  }
  return value;
}

std::vector<double> cell_averages(const DensityModel& model, const DyadicGrid& grid) {
  if (grid.total_cells() > (std::uint64_t{1} << 24)) {
    throw ResourceError("cell_averages: grid exceeds 2^24 cells");
  }
  const auto total = static_cast<std::int64_t>(grid.total_cells());
  std::vector<double> out(total);
  const double mu = grid.cell_measure();
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t key = 0; key < total; ++key) {
    try {
      out[key] = cell_mass(model, cell_of(static_cast<MortonKey>(key), grid), grid) / mu;
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

SampleSet sample(const DensityModel& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample: n must be at least 1");
  SampleSet s;
  s.d = model.d();
  s.seed = seed;
  s.points.reserve(n * s.d);
  std::mt19937_64 rng(seed);
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const double fmax = model.f_max();
  std::array<double, kMaxDim> x{};
  std::size_t accepted = 0;
  std::uint64_t proposals = 0;
  while (accepted < n) {
    for (int i = 0; i < s.d; ++i) x[i] = uniform();
    const double u = uniform();
    ++proposals;
    if (u * fmax < model.density_unchecked(x.data())) {
      s.points.insert(s.points.end(), x.begin(), x.begin() + s.d);
      ++accepted;
    }
  }
  s.acceptance_rate = static_cast<double>(n) / static_cast<double>(proposals);
  return s;
}

AssumptionReport check_assumptions(const DensityModel& model) {
  AssumptionReport r;
  const int d = model.d();
  const int j = d == 1 ? 14 : (d == 2 ? 8 : 6);
  const DyadicGrid grid(d, j);

  // Mass check through the per-cell route at a coarse grid.
  {
    const DyadicGrid coarse(d, d == 1 ? 6 : (d == 2 ? 3 : 2));
    double total = 0.0;
    for (MortonKey k = 0; k < coarse.total_cells(); ++k) total += cell_mass(model, cell_of(k, coarse), coarse);
    r.integral_residual = std::abs(total - 1.0);
    r.integral_tolerance = model.integral_tolerance();
  }

  const auto& c = model.constants();
  const double gamma = model.gamma();
  const double alpha = model.alpha();
  r.vacuous = !c.has_boundary || model.is_support();
  r.f_lo = kInf;
  r.f_hi = -kInf;
  const double slack = 1e-12;
  // f - gamma cancels; allow a few ulps of the operands near the boundary.
  const double abs_slack = 16 * std::numeric_limits<double>::epsilon() * std::max(model.f_max(), gamma);
  for (MortonKey k = 0; k < grid.total_cells(); ++k) {
    const auto x = center(cell_of(k, grid), grid);
    const double f = model.density_unchecked(x.data());
    r.f_lo = std::min(r.f_lo, f);
    r.f_hi = std::max(r.f_hi, f);
    if (r.vacuous) continue;
    const double dev = std::abs(f - gamma);
    const double rho = model.boundary_distance_unchecked(x.data());
    if (dev <= c.delta1) {
      ++r.lower_checked;
      if (dev < c.c1 * std::pow(rho, alpha) * (1.0 - slack) - abs_slack) ++r.lower_violations;
    }
    double dist0 = 0.0;
    for (int i = 0; i < d; ++i) dist0 += (x[i] - c.x0[i]) * (x[i] - c.x0[i]);
    if (std::sqrt(dist0) <= c.delta2) {
      ++r.upper_checked;
      if (dev > c.c2 * std::pow(rho, alpha) * (1.0 + slack) + abs_slack) ++r.upper_violations;
    }
  }
  r.range_ok = r.f_lo >= 0.0 && r.f_hi <= model.f_max() * (1.0 + slack);
  return r;
}

}  // namespace hauslev
