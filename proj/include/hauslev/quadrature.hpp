#pragma once

#include <functional>
#include <span>
#include <vector>

namespace hauslev {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // difference between the last two levels
  bool converged = false;
};

/// Tanh-sinh quadrature on [a, b]; copes with integrable algebraic endpoint
/// singularities. f is only evaluated strictly inside (a, b).
QuadResult tanh_sinh(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-13,
                     double abs_tol = 0.0);

/// Integral over [a, b] split at the given interior breakpoints.
QuadResult piecewise_tanh_sinh(const std::function<double(double)>& f, double a, double b,
                               std::vector<double> breaks, double rel_tol = 1e-13, double abs_tol = 0.0);

/// Angle (radians) of the circle of radius r about the origin that lies in
/// the rectangle [lo0, hi0] x [lo1, hi1].
double circle_angle_in_rect(double r, const double* lo, const double* hi);

/// Surface measure of the sphere of radius r about the origin inside the
/// box [lo, hi] in d = 1, 2, 3 (point count, arc length, area).
QuadResult sphere_measure_in_box(int d, double r, const double* lo, const double* hi);

/// Integral over the box [lo, hi] of h(|x|), where h vanishes beyond r_max
/// and is smooth between the listed radii.
QuadResult radial_box_integral(int d, const std::function<double(double)>& h, double r_max,
                               std::span<const double> h_breaks, const double* lo, const double* hi,
                               double abs_tol = 0.0);

}  // namespace hauslev
