#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace hauslev {

inline constexpr std::uint32_t kUnreached = std::numeric_limits<std::uint32_t>::max();

/// Largest lattice (in points) the distance-transform paths will allocate.
inline constexpr std::uint64_t kLatticeLimit = std::uint64_t{1} << 24;

/// Dense d-dimensional lattice with `side` points per axis, row-major with the
/// last axis fastest.
struct Lattice {
  int d;
  std::uint32_t side;

  std::uint64_t size() const noexcept {
    std::uint64_t n = 1;
    for (int i = 0; i < d; ++i) n *= side;
    return n;
  }
};

/// Exact squared Euclidean distance from every lattice point to the nearest
/// source point (Felzenszwalb-Huttenlocher lower envelopes, one axis at a
/// time). Points with no source anywhere get kUnreached. Lines are processed
/// in parallel.
std::vector<std::uint32_t> squared_distance_transform(std::span<const std::uint8_t> sources,
                                                      const Lattice& lattice);

/// Same transform, single-threaded.
std::vector<std::uint32_t> squared_distance_transform_serial(
    std::span<const std::uint8_t> sources, const Lattice& lattice);

}  // namespace hauslev
