#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "hauslev/morton.hpp"

namespace hauslev {

/// Regular partition of [0,1]^d into 2^(jd) cubes of sidelength 2^-j.
class DyadicGrid {
 public:
  DyadicGrid(int d, int j);

  int d() const noexcept { return d_; }
  int j() const noexcept { return j_; }
  std::uint64_t cells_per_axis() const noexcept { return std::uint64_t{1} << j_; }
  std::uint64_t total_cells() const noexcept { return std::uint64_t{1} << (j_ * d_); }
  double sidelength() const noexcept { return std::ldexp(1.0, -j_); }
  double cell_measure() const noexcept { return std::ldexp(1.0, -j_ * d_); }

  friend bool operator==(const DyadicGrid&, const DyadicGrid&) = default;

 private:
  int d_;
  int j_;
};

/// Integer address of one cell; only the first d coordinates are meaningful.
struct CellIndex {
  std::array<std::uint32_t, kMaxDim> k{};

  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Cell containing `point`, half-open [k h, (k+1) h) with the top face closed
/// on the domain boundary. Throws std::domain_error outside [0,1]^d.
CellIndex locate(std::span<const double> point, const DyadicGrid& grid);

/// Center coordinates ((k_i + 1/2) 2^-j)_i.
std::array<double, kMaxDim> center(const CellIndex& cell, const DyadicGrid& grid);

bool is_valid(const CellIndex& cell, const DyadicGrid& grid);

MortonKey key_of(const CellIndex& cell, const DyadicGrid& grid);
CellIndex cell_of(MortonKey key, const DyadicGrid& grid);

/// Finite union of cells at one resolution, stored as sorted unique Morton keys.
class GridSet {
 public:
  explicit GridSet(DyadicGrid grid) : grid_(grid) {}
  /// Duplicates are merged; invalid cells throw std::domain_error.
  GridSet(DyadicGrid grid, std::span<const CellIndex> cells);

  static GridSet from_keys(DyadicGrid grid, std::vector<MortonKey> keys);
  static GridSet full(DyadicGrid grid);

  const DyadicGrid& grid() const noexcept { return grid_; }
  std::span<const MortonKey> keys() const noexcept { return keys_; }
  std::size_t size() const noexcept { return keys_.size(); }
  bool empty() const noexcept { return keys_.empty(); }
  bool contains(const CellIndex& cell) const;
  double measure() const noexcept { return static_cast<double>(keys_.size()) * grid_.cell_measure(); }

  /// Members in lexicographic coordinate order.
  std::vector<CellIndex> cells() const;

  /// Every member replaced by its 2^(levels d) children.
  GridSet refined(int levels) const;

  bool is_subset_of(const GridSet& other) const;

  friend bool operator==(const GridSet&, const GridSet&) = default;

 private:
  DyadicGrid grid_;
  std::vector<MortonKey> keys_;
};

enum class HausdorffMethod { automatic, distance_transform, pairwise };

/// Hausdorff distance between the cell-center clouds of two sets.
/// Empty inputs (either or both) give sqrt(d), the diameter of the domain.
/// `automatic` uses the distance transform when the common lattice is small
/// relative to |A||B|, otherwise a parallel pairwise scan. Results agree bit for bit.
double hausdorff(const GridSet& a, const GridSet& b,
                 HausdorffMethod method = HausdorffMethod::automatic);

/// Literal O(|A||B|) double loop; the reference for `hausdorff`.
double hausdorff_bruteforce(const GridSet& a, const GridSet& b);

/// Lebesgue measure of the symmetric difference of the two cell unions.
double symmetric_difference_measure(const GridSet& a, const GridSet& b);

/// Sup over boundary cells of G of the distance from their centers to the
/// discrete inner epsilon-cover; +infinity when that cover is empty.
double inner_cover_distance(const GridSet& g, double epsilon);

/// Euclidean distance between two cell centers, possibly at different levels.
double center_distance(const CellIndex& a, const DyadicGrid& ga, const CellIndex& b,
                       const DyadicGrid& gb);

}  // namespace hauslev
