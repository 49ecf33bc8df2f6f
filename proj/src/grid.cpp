#include "hauslev/grid.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include "hauslev/edt.hpp"
#include "hauslev/error.hpp"

namespace hauslev {

DyadicGrid::DyadicGrid(int d, int j) : d_(d), j_(j) {
  if (d < 1 || d > kMaxDim) {
    throw std::domain_error("dimension must be in [1, " + std::to_string(kMaxDim) + "], got " +
                            std::to_string(d));
  }
  if (j < 0 || j > 31 || j * d > 63) {
    throw std::domain_error("resolution j=" + std::to_string(j) +
                            " out of range for d=" + std::to_string(d));
  }
}

CellIndex locate(std::span<const double> point, const DyadicGrid& grid) {
  if (static_cast<int>(point.size()) != grid.d()) {
    throw std::domain_error("point dimension does not match grid");
  }
  CellIndex cell;
  const std::uint64_t top = grid.cells_per_axis() - 1;
  for (int i = 0; i < grid.d(); ++i) {
    const double x = point[i];
    if (!(x >= 0.0 && x <= 1.0)) {
      throw std::domain_error("coordinate " + std::to_string(x) + " outside [0,1]");
    }
    const auto k = static_cast<std::uint64_t>(std::floor(std::ldexp(x, grid.j())));
    cell.k[i] = static_cast<std::uint32_t>(std::min(k, top));
  }
  return cell;
}

std::array<double, kMaxDim> center(const CellIndex& cell, const DyadicGrid& grid) {
  std::array<double, kMaxDim> c{};
  const double h = grid.sidelength();
  for (int i = 0; i < grid.d(); ++i) c[i] = (static_cast<double>(cell.k[i]) + 0.5) * h;
  return c;
}

bool is_valid(const CellIndex& cell, const DyadicGrid& grid) {
  for (int i = 0; i < grid.d(); ++i) {
    if (cell.k[i] >= grid.cells_per_axis()) return false;
  }
  for (int i = grid.d(); i < kMaxDim; ++i) {
    if (cell.k[i] != 0) return false;
  }
  return true;
}

MortonKey key_of(const CellIndex& cell, const DyadicGrid& grid) {
  return morton_encode(cell.k, grid.d(), grid.j());
}

CellIndex cell_of(MortonKey key, const DyadicGrid& grid) {
  return CellIndex{morton_decode(key, grid.d(), grid.j())};
}

GridSet::GridSet(DyadicGrid grid, std::span<const CellIndex> cells) : grid_(grid) {
  keys_.reserve(cells.size());
  for (const auto& c : cells) {
    if (!is_valid(c, grid_)) throw std::domain_error("cell index outside grid");
    keys_.push_back(key_of(c, grid_));
  }
  std::sort(keys_.begin(), keys_.end());
  keys_.erase(std::unique(keys_.begin(), keys_.end()), keys_.end());
}

GridSet GridSet::from_keys(DyadicGrid grid, std::vector<MortonKey> keys) {
  GridSet s(grid);
  const MortonKey limit = grid.total_cells();
  for (auto k : keys) {
    if (k >= limit) throw std::domain_error("cell key outside grid");
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  s.keys_ = std::move(keys);
  return s;
}

GridSet GridSet::full(DyadicGrid grid) {
  if (grid.total_cells() > kLatticeLimit) throw ResourceError("full grid exceeds lattice limit");
  std::vector<MortonKey> keys(grid.total_cells());
  for (MortonKey k = 0; k < keys.size(); ++k) keys[k] = k;
  GridSet s(grid);
  s.keys_ = std::move(keys);
  return s;
}

bool GridSet::contains(const CellIndex& cell) const {
  if (!is_valid(cell, grid_)) return false;
  return std::binary_search(keys_.begin(), keys_.end(), key_of(cell, grid_));
}

std::vector<CellIndex> GridSet::cells() const {
  std::vector<CellIndex> out;
  out.reserve(keys_.size());
  for (auto k : keys_) out.push_back(cell_of(k, grid_));
  std::sort(out.begin(), out.end(),
            [](const CellIndex& a, const CellIndex& b) { return a.k < b.k; });
  return out;
}

GridSet GridSet::refined(int levels) const {
  if (levels < 0) throw std::domain_error("refinement levels must be non-negative");
  const DyadicGrid fine(grid_.d(), grid_.j() + levels);
  const int shift = levels * grid_.d();
  std::vector<MortonKey> keys;
  keys.reserve(keys_.size() << shift);
  for (auto k : keys_) {
    const MortonKey first = k << shift;
    for (MortonKey c = 0; c < (MortonKey{1} << shift); ++c) keys.push_back(first + c);
  }
  GridSet s(fine);
  s.keys_ = std::move(keys);
  return s;
}

bool GridSet::is_subset_of(const GridSet& other) const {
  if (!(grid_ == other.grid_)) throw std::domain_error("subset test needs equal grids");
  return std::includes(other.keys_.begin(), other.keys_.end(), keys_.begin(), keys_.end());
}

double center_distance(const CellIndex& a, const DyadicGrid& ga, const CellIndex& b,
                       const DyadicGrid& gb) {
  const auto ca = center(a, ga);
  const auto cb = center(b, gb);
  double s = 0.0;
  for (int i = 0; i < ga.d(); ++i) {
    const double diff = ca[i] - cb[i];
    s += diff * diff;
  }
  return std::sqrt(s);
}

namespace {

void require_same_dimension(const GridSet& a, const GridSet& b) {
  if (a.grid().d() != b.grid().d()) {
    throw std::domain_error("dimension mismatch: " + std::to_string(a.grid().d()) + " vs " +
                            std::to_string(b.grid().d()));
  }
}

double empty_set_distance(int d) { return std::sqrt(static_cast<double>(d)); }

std::vector<std::array<double, kMaxDim>> centers_of(const GridSet& s) {
  std::vector<std::array<double, kMaxDim>> out;
  out.reserve(s.size());
  for (auto k : s.keys()) out.push_back(center(cell_of(k, s.grid()), s.grid()));
  return out;
}

double directed_sup(const std::vector<std::array<double, kMaxDim>>& from,
                    const std::vector<std::array<double, kMaxDim>>& to, int d, bool parallel) {
  double sup = 0.0;
  const auto count = static_cast<std::int64_t>(from.size());
  auto nearest = [&](std::int64_t i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to) {
      double s = 0.0;
      for (int a = 0; a < d; ++a) {
        const double diff = from[i][a] - q[a];
        s += diff * diff;
      }
      best = std::min(best, std::sqrt(s));
    }
    return best;
  };
  if (parallel) {
#pragma omp parallel for reduction(max : sup) schedule(static)
    for (std::int64_t i = 0; i < count; ++i) sup = std::max(sup, nearest(i));
  } else {
    for (std::int64_t i = 0; i < count; ++i) sup = std::max(sup, nearest(i));
  }
  return sup;
}

double hausdorff_pairwise(const GridSet& a, const GridSet& b, bool parallel) {
  const auto ca = centers_of(a);
  const auto cb = centers_of(b);
  const int d = a.grid().d();
  return std::max(directed_sup(ca, cb, d, parallel), directed_sup(cb, ca, d, parallel));
}

// Both sets embedded in a common integer lattice. At equal resolution the
// lattice is the cell grid itself; otherwise it is the half-cell lattice of
// the finer grid, on which every center of either set is a lattice point.
struct CommonLattice {
  Lattice lattice;
  int unit_exponent;  // lattice spacing is 2^-unit_exponent
  bool same_level;
  int top;
};

CommonLattice common_lattice(const GridSet& a, const GridSet& b) {
  const int ja = a.grid().j();
  const int jb = b.grid().j();
  CommonLattice c{};
  c.same_level = ja == jb;
  c.top = std::max(ja, jb);
  c.unit_exponent = c.same_level ? ja : c.top + 1;
  c.lattice = Lattice{a.grid().d(), 0};
  if (c.unit_exponent <= 15) c.lattice.side = std::uint32_t{1} << c.unit_exponent;
  return c;
}

std::uint64_t lattice_index(const CellIndex& cell, const DyadicGrid& g, const CommonLattice& c) {
  std::uint64_t idx = 0;
  for (int i = 0; i < g.d(); ++i) {
    std::uint64_t x = cell.k[i];
    if (!c.same_level) x = (2 * x + 1) << (c.top - g.j());
    idx = idx * c.lattice.side + x;
  }
  return idx;
}

std::uint32_t directed_sup_squared(const GridSet& from, const GridSet& to, const CommonLattice& c) {
  std::vector<std::uint8_t> mask(c.lattice.size(), 0);
  for (auto k : to.keys()) mask[lattice_index(cell_of(k, to.grid()), to.grid(), c)] = 1;
  const auto dist = squared_distance_transform(mask, c.lattice);
  std::uint32_t sup = 0;
  for (auto k : from.keys()) {
    sup = std::max(sup, dist[lattice_index(cell_of(k, from.grid()), from.grid(), c)]);
  }
  return sup;
}

}  // namespace

double hausdorff_bruteforce(const GridSet& a, const GridSet& b) {
  require_same_dimension(a, b);
  if (a.empty() || b.empty()) return empty_set_distance(a.grid().d());
  return hausdorff_pairwise(a, b, false);
}

double hausdorff(const GridSet& a, const GridSet& b, HausdorffMethod method) {
  require_same_dimension(a, b);
  if (a.empty() || b.empty()) return empty_set_distance(a.grid().d());
  const auto c = common_lattice(a, b);
  const bool lattice_ok = c.lattice.side != 0 && c.lattice.size() <= kLatticeLimit;
  bool use_transform = false;
  switch (method) {
    case HausdorffMethod::automatic: {
      const double pairs = static_cast<double>(a.size()) * static_cast<double>(b.size());
      use_transform = lattice_ok && pairs > 4.0 * static_cast<double>(c.lattice.size());
      break;
    }
    case HausdorffMethod::distance_transform:
      if (!lattice_ok) throw ResourceError("hausdorff: common lattice exceeds limit");
      use_transform = true;
      break;
    case HausdorffMethod::pairwise:
      use_transform = false;
      break;
  }
  if (!use_transform) return hausdorff_pairwise(a, b, true);
  const std::uint32_t sup = std::max(directed_sup_squared(a, b, c), directed_sup_squared(b, a, c));
  // sqrt(D * 4^-m) == sqrt(D) * 2^-m exactly, so this matches the pairwise route bit for bit.
  return std::ldexp(std::sqrt(static_cast<double>(sup)), -c.unit_exponent);
}

double symmetric_difference_measure(const GridSet& a, const GridSet& b) {
  require_same_dimension(a, b);
  const bool a_coarse = a.grid().j() <= b.grid().j();
  const GridSet& coarse = a_coarse ? a : b;
  const GridSet& fine = a_coarse ? b : a;
  const int shift = (fine.grid().j() - coarse.grid().j()) * fine.grid().d();
  // Fine cells lying inside coarse members; both key lists are sorted.
  std::uint64_t shared = 0;
  auto f = fine.keys().begin();
  const auto fend = fine.keys().end();
  for (auto ck : coarse.keys()) {
    f = std::lower_bound(f, fend, ck << shift);
    const MortonKey stop = (ck + 1) << shift;
    while (f != fend && *f < stop) {
      ++shared;
      ++f;
    }
  }
  const double inter = static_cast<double>(shared) * fine.grid().cell_measure();
  return a.measure() + b.measure() - 2.0 * inter;
}

double inner_cover_distance(const GridSet& g, double epsilon) {
  if (g.empty()) throw std::domain_error("inner cover of an empty set");
  const auto& grid = g.grid();
  const double h = grid.sidelength();
  if (!(epsilon >= 2.0 * h)) {
    throw std::domain_error("epsilon must be at least twice the sidelength");
  }
  if (grid.total_cells() > kLatticeLimit || grid.j() > 15) {
    throw ResourceError("inner cover: grid exceeds lattice limit");
  }
  const int d = grid.d();
  const Lattice lat{d, static_cast<std::uint32_t>(grid.cells_per_axis())};
  const std::uint32_t side = lat.side;
  CommonLattice self{lat, grid.j(), true, grid.j()};

  std::vector<std::uint8_t> member(lat.size(), 0);
  for (auto k : g.keys()) member[lattice_index(cell_of(k, grid), grid, self)] = 1;

  // Squared radius in cell units; a center is within epsilon iff |o|^2 h^2 <= eps^2.
  const double radius = epsilon / h;
  const auto reach = static_cast<std::int64_t>(std::floor(radius));
  std::vector<std::array<std::int64_t, kMaxDim>> ball;
  {
    std::array<std::int64_t, kMaxDim> o{};
    const std::int64_t span = 2 * reach + 1;
    std::int64_t total = 1;
    for (int i = 0; i < d; ++i) total *= span;
    for (std::int64_t t = 0; t < total; ++t) {
      std::int64_t rem = t;
      double norm2 = 0.0;
      for (int i = 0; i < d; ++i) {
        o[i] = rem % span - reach;
        rem /= span;
        norm2 += static_cast<double>(o[i] * o[i]);
      }
      if (norm2 * h * h <= epsilon * epsilon) ball.push_back(o);
    }
  }

  auto decode = [&](std::uint64_t idx) {
    std::array<std::int64_t, kMaxDim> x{};
    for (int i = d - 1; i >= 0; --i) {
      x[i] = static_cast<std::int64_t>(idx % side);
      idx /= side;
    }
    return x;
  };
  auto encode = [&](const std::array<std::int64_t, kMaxDim>& x) {
    std::uint64_t idx = 0;
    for (int i = 0; i < d; ++i) idx = idx * side + static_cast<std::uint64_t>(x[i]);
    return idx;
  };

  // Covered centers: the discrete ball (clipped to the domain) lies in G.
  std::vector<std::uint8_t> covered(lat.size(), 0);
  bool any_covered = false;
  const auto n_points = static_cast<std::int64_t>(lat.size());
#pragma omp parallel for schedule(static) reduction(|| : any_covered)
  for (std::int64_t idx = 0; idx < n_points; ++idx) {
    if (!member[idx]) continue;
    const auto x = decode(static_cast<std::uint64_t>(idx));
    bool inside = true;
    for (const auto& o : ball) {
      std::array<std::int64_t, kMaxDim> y{};
      bool in_domain = true;
      for (int i = 0; i < d; ++i) {
        y[i] = x[i] + o[i];
        if (y[i] < 0 || y[i] >= static_cast<std::int64_t>(side)) in_domain = false;
      }
      if (in_domain && !member[encode(y)]) {
        inside = false;
        break;
      }
    }
    if (inside) {
      covered[idx] = 1;
      any_covered = true;
    }
  }
  if (!any_covered) return std::numeric_limits<double>::infinity();

  // Inner cover = union of those balls = centers within epsilon of a covered center.
  const auto to_covered = squared_distance_transform(covered, lat);
  std::vector<std::uint8_t> cover(lat.size(), 0);
  for (std::size_t i = 0; i < cover.size(); ++i) {
    cover[i] = to_covered[i] != kUnreached &&
               static_cast<double>(to_covered[i]) * h * h <= epsilon * epsilon;
  }
  const auto to_cover = squared_distance_transform(cover, lat);

  std::uint32_t sup = 0;
  for (std::int64_t idx = 0; idx < n_points; ++idx) {
    if (!member[idx]) continue;
    const auto x = decode(static_cast<std::uint64_t>(idx));
    bool boundary = false;
    for (int i = 0; i < d && !boundary; ++i) {
      for (int step : {-1, 1}) {
        auto y = x;
        y[i] += step;
        if (y[i] < 0 || y[i] >= static_cast<std::int64_t>(side)) continue;
        if (!member[encode(y)]) {
          boundary = true;
          break;
        }
      }
    }
    if (boundary) sup = std::max(sup, to_cover[idx]);
  }
  return std::sqrt(static_cast<double>(sup)) * h;
}

}  // namespace hauslev
