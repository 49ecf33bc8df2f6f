#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hauslev/grid.hpp"

namespace hauslev {

enum class Shape { interval, ball, two_component, uniform, ribbon };

std::string to_string(Shape s);
/// Accepts "interval", "ball", "two-component", "uniform", "ribbon"; throws std::invalid_argument.
Shape parse_shape(const std::string& name);

struct ModelSpec {
  int d = 1;
  Shape shape = Shape::interval;
  double alpha = 1.0;
  // Unset: gamma follows from the contrast rule a * r_cap^alpha = contrast * gamma.
  std::optional<double> gamma;
  double contrast = 0.9;
  // r_cap as a fraction of the smallest component inradius.
  double cap_fraction = 0.5;
  // Support model: f = c * min(rho, r_cap)^alpha on G, zero outside, level 0.
  bool support = false;
  // Empty means the shape default. Interval-like shapes: lo,hi pairs on the
  // last axis. Ball-like shapes: d center coordinates then the radius, per ball.
  std::vector<double> geometry;
};

/// Constants the model achieves for the regularity assumptions; see check_assumptions().
struct ModelConstants {
  double c1 = 0.0;      // lower constant near the level
  double c2 = 0.0;      // upper constant
  double delta1 = 0.0;  // band |f - gamma| <= delta1 where the lower bound is checked
  double delta2 = 0.0;  // radius around x0 where the upper bound is checked
  double eps_o = 0.0;   // inner-cover scale surrogate
  double sandwich_c = 0.0;  // C in V <= C (sqrt(d) 2^-j)^alpha
  std::array<double, kMaxDim> x0{};
  bool has_boundary = false;
};

class DensityModel {
 public:
  int d() const noexcept { return spec_.d; }
  double gamma() const noexcept { return gamma_; }
  double alpha() const noexcept { return spec_.alpha; }
  double amplitude() const noexcept { return amp_; }
  double r_cap() const noexcept { return r_cap_; }
  double f_max() const noexcept { return f_max_; }
  double f_min() const noexcept { return f_min_; }
  bool is_support() const noexcept { return spec_.support; }
  const ModelSpec& spec() const noexcept { return spec_; }
  const ModelConstants& constants() const noexcept { return constants_; }
  /// Integral of the unscaled profile sign * min(rho, r_cap)^alpha (or its
  /// inside part for support models), evaluated in closed form.
  double profile_integral() const noexcept { return profile_integral_; }

  /// Geometry after defaults were applied.
  const std::vector<std::pair<double, double>>& intervals() const noexcept { return intervals_; }
  struct Ball {
    std::array<double, kMaxDim> center{};
    double radius = 0.0;
  };
  const std::vector<Ball>& balls() const noexcept { return balls_; }

  bool inside(std::span<const double> x) const;
  // Unchecked versions used by the hot loops.
  double density_unchecked(const double* x) const;
  double boundary_distance_unchecked(const double* x) const;

 private:
  friend DensityModel make_model(const ModelSpec& spec);
  bool slab_like() const noexcept { return balls_.empty(); }
  bool inside_unchecked(const double* x) const;

  ModelSpec spec_;
  std::vector<std::pair<double, double>> intervals_;
  std::vector<double> boundary_points_;  // relative boundary on the last axis
  std::vector<Ball> balls_;
  double gamma_ = 1.0;
  double amp_ = 0.0;
  double r_cap_ = 0.0;
  double f_max_ = 1.0;
  double f_min_ = 1.0;
  double profile_integral_ = 0.0;
  ModelConstants constants_;
  double integral_tolerance_ = 1e-9;

 public:
  /// Integral of the profile over the last-axis range [lo, hi] (slab shapes),
  /// signed for level models, inside-only for support models.
  double slab_integral(double lo, double hi) const;
  /// Accuracy the cell-mass route is expected to reach on a full sweep.
  double integral_tolerance() const noexcept { return integral_tolerance_; }
};

/// Throws ConstructionError for inadmissible geometry or infeasible normalization.
DensityModel make_model(const ModelSpec& spec);

/// Throws std::domain_error outside [0,1]^d.
double density_at(const DensityModel& model, std::span<const double> point);
double boundary_distance(const DensityModel& model, std::span<const double> point);

/// Cells whose center satisfies f >= gamma (f > 0 for support models).
GridSet true_level_set(const DensityModel& model, int j);
GridSet true_level_set_serial(const DensityModel& model, int j);

/// Probability mass P(A) of one cell. Exact for interval-like shapes; for
/// balls a radial integral against the sphere measure inside the cell, by
/// tanh-sinh quadrature (NumericError if its error estimate is too large).
double cell_mass(const DensityModel& model, const CellIndex& cell, const DyadicGrid& grid);

/// Average density P(A)/mu(A) over every cell of the grid, indexed by Morton key.
std::vector<double> cell_averages(const DensityModel& model, const DyadicGrid& grid);

struct SampleSet {
  int d = 1;
  std::uint64_t seed = 0;
  std::vector<double> points;  // row-major, n x d
  double acceptance_rate = 1.0;

  std::size_t n() const noexcept { return points.size() / static_cast<std::size_t>(d); }
  std::span<const double> point(std::size_t i) const { return {points.data() + i * d, static_cast<std::size_t>(d)}; }
};

/// Rejection sampling from uniform proposals; bit-reproducible per seed.
SampleSet sample(const DensityModel& model, std::size_t n, std::uint64_t seed);

struct AssumptionReport {
  double integral_residual = 0.0;  // |sum of cell masses - 1|
  double f_lo = 0.0, f_hi = 0.0;   // observed range on the check grid
  bool range_ok = true;
  std::size_t lower_checked = 0, lower_violations = 0;
  std::size_t upper_checked = 0, upper_violations = 0;
  bool vacuous = false;  // no boundary: the regularity checks have nothing to test
  double integral_tolerance = 1e-9;
  bool ok() const noexcept {
    return range_ok && lower_violations == 0 && upper_violations == 0 &&
           integral_residual <= integral_tolerance;
  }
};

/// Checks the regularity bounds with the recorded constants at the centers of
/// a dyadic check grid (resolution chosen per dimension).
AssumptionReport check_assumptions(const DensityModel& model);

}  // namespace hauslev
