#include "hauslev/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "hauslev/error.hpp"

namespace hauslev {

namespace {

constexpr int kMaxLevel = 9;
constexpr double kHalfPi = std::numbers::pi / 2;

// Distances from the origin to every face plane, edge line and corner of the box.
struct Radii {
  std::array<double, 26> r{};
  int count = 0;
};

Radii box_radii(int d, const double* lo, const double* hi) {
  Radii out;
  int total = 1;
  for (int i = 0; i < d; ++i) total *= 3;
  // each axis contributes nothing, lo or hi
  for (int t = 1; t < total; ++t) {
    int rem = t;
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
      const int pick = rem % 3;
      rem /= 3;
      if (pick == 1) s += lo[i] * lo[i];
      if (pick == 2) s += hi[i] * hi[i];
    }
    out.r[out.count++] = std::sqrt(s);
  }
  return out;
}

bool in_rect(double x, double y, const double* lo, const double* hi) {
  return x >= lo[0] && x <= hi[0] && y >= lo[1] && y <= hi[1];
}

}  // namespace

QuadResult tanh_sinh(const std::function<double(double)>& f, double a, double b, double rel_tol, double abs_tol) {
  QuadResult out;
  if (!(a < b)) {
    out.converged = true;
    return out;
  }
  const double half = 0.5 * (b - a);
  // Sum over nodes t = k h, k odd at levels > 0; the level-0 pass takes all k.
  auto node_sum = [&](double h, int step, int start) {
    double s = 0.0;
    for (int k = start;; k += step) {
      const double t = k * h;
      const double u = kHalfPi * std::sinh(t);
      const double e = std::exp(-2.0 * u);       // small for large t
      const double offset = (b - a) * e / (1.0 + e);  // distance of the outer nodes from the ends
      const double ch = std::cosh(u);
      const double w = half * kHalfPi * std::cosh(t) / (ch * ch);
      if (!(offset > 0.0) || w < 1e-300 || !std::isfinite(w)) break;
      if (k == 0) {
        s += w * f(0.5 * (a + b));
      } else {
        s += w * (f(a + offset) + f(b - offset));
      }
    }
    return s;
  };
  double h = 1.0;
  double sum = node_sum(h, 1, 0);
  double estimate = h * sum;
  for (int level = 1; level <= kMaxLevel; ++level) {
    h *= 0.5;
    sum += node_sum(h, 2, 1);
    const double next = h * sum;
    out.error = std::abs(next - estimate);
    estimate = next;
    if (level >= 3 && out.error <= std::max(abs_tol, rel_tol * std::abs(estimate))) {
      out.converged = true;
      break;
    }
  }
  out.value = estimate;
  return out;
}

QuadResult piecewise_tanh_sinh(const std::function<double(double)>& f, double a, double b, std::vector<double> breaks,
                               double rel_tol, double abs_tol) {
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  QuadResult out;
  out.converged = true;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double p = std::max(a, breaks[i]);
    const double q = std::min(b, breaks[i + 1]);
    if (!(p < q)) continue;
    const QuadResult piece = tanh_sinh(f, p, q, rel_tol, abs_tol);
    out.value += piece.value;
    out.error += piece.error;
    out.converged = out.converged && piece.converged;
  }
  return out;
}

double circle_angle_in_rect(double r, const double* lo, const double* hi) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (!(r > 0.0)) return in_rect(0.0, 0.0, lo, hi) ? kTwoPi : 0.0;
  std::array<double, 10> cuts;
  int n = 0;
  cuts[n++] = 0.0;
  cuts[n++] = kTwoPi;
  auto add = [&](double phi) {
    if (phi < 0.0) phi += kTwoPi;
    if (phi >= kTwoPi) phi -= kTwoPi;
    cuts[n++] = phi;
  };
  for (double v : {lo[0], hi[0]}) {
    if (std::abs(v) < r) {
      const double phi = std::acos(v / r);
      add(phi);
      add(-phi);
    }
  }
  for (double v : {lo[1], hi[1]}) {
    if (std::abs(v) < r) {
      const double phi = std::asin(v / r);
      add(phi);
      add(std::numbers::pi - phi);
    }
  }
  std::sort(cuts.begin(), cuts.begin() + n);
  double total = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    const double len = cuts[i + 1] - cuts[i];
    if (!(len > 0.0)) continue;
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    if (in_rect(r * std::cos(mid), r * std::sin(mid), lo, hi)) total += len;
  }
  return total;
}

QuadResult sphere_measure_in_box(int d, double r, const double* lo, const double* hi) {
  QuadResult out;
  out.converged = true;
  if (d == 1) {
    out.value = (-r >= lo[0] && -r <= hi[0]) + (r > 0.0 && r >= lo[0] && r <= hi[0]);
    return out;
  }
  if (d == 2) {
    out.value = r * circle_angle_in_rect(r, lo, hi);
    return out;
  }
  if (d != 3) throw std::domain_error("sphere_measure_in_box: d must be 1, 2 or 3");
  // Archimedes: area between two heights is 2 pi r dz, so slice by z.
  const double z0 = std::max(lo[2], -r), z1 = std::min(hi[2], r);
  if (!(z0 < z1)) {
    out.value = 0.0;
    return out;
  }
  std::vector<double> breaks{0.0};
  const Radii radii = box_radii(2, lo, hi);
  for (int i = 0; i < radii.count; ++i) {
    const double c = radii.r[i];
    if (c < r) {
      const double z = std::sqrt(r * r - c * c);
      breaks.push_back(z);
      breaks.push_back(-z);
    }
  }
  auto slice = [&](double z) { return circle_angle_in_rect(std::sqrt(std::max(0.0, r * r - z * z)), lo, hi); };
  out = piecewise_tanh_sinh(slice, z0, z1, breaks, 1e-14, 1e-15 * r);
  out.value *= r;
  out.error *= r;
  return out;
}

QuadResult radial_box_integral(int d, const std::function<double(double)>& h, double r_max,
                               std::span<const double> h_breaks, const double* lo, const double* hi,
                               double abs_tol) {
  double near = 0.0, far = 0.0;
  for (int i = 0; i < d; ++i) {
    const double nearest = lo[i] > 0.0 ? lo[i] : (hi[i] < 0.0 ? -hi[i] : 0.0);
    const double farthest = std::max(std::abs(lo[i]), std::abs(hi[i]));
    near += nearest * nearest;
    far += farthest * farthest;
  }
  const double a = std::sqrt(near);
  const double b = std::min(std::sqrt(far), r_max);
  QuadResult out;
  out.converged = true;
  if (!(a < b)) return out;
  const Radii radii = box_radii(d, lo, hi);
  std::vector<double> breaks(radii.r.begin(), radii.r.begin() + radii.count);
  breaks.insert(breaks.end(), h_breaks.begin(), h_breaks.end());
  double inner_error = 0.0;
  bool inner_ok = true;
  auto integrand = [&](double r) {
    const double hr = h(r);
    if (hr == 0.0) return 0.0;
    const QuadResult m = sphere_measure_in_box(d, r, lo, hi);
    inner_ok = inner_ok && m.converged;
    inner_error = std::max(inner_error, std::abs(hr) * m.error);
    return hr * m.value;
  };
  out = piecewise_tanh_sinh(integrand, a, b, breaks, 1e-13, abs_tol);
  out.error += inner_error * (b - a);
  out.converged = out.converged && inner_ok;
  return out;
}

}  // namespace hauslev
