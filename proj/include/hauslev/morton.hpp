#pragma once

#include <array>
#include <cstdint>

namespace hauslev {

inline constexpr int kMaxDim = 3;

using MortonKey = std::uint64_t;

// Bit-interleaved cell keys. Children of a cell at level j are the contiguous
// key range [key << (s*d), (key + 1) << (s*d)) at level j + s, so coarsening is
// a right shift and sorted key arrays stay sorted across levels.

inline MortonKey morton_encode(const std::array<std::uint32_t, kMaxDim>& k, int d, int j) {
  MortonKey key = 0;
  for (int bit = j - 1; bit >= 0; --bit) {
    for (int axis = 0; axis < d; ++axis) {
      key = (key << 1) | ((k[axis] >> bit) & 1u);
    }
  }
  return key;
}

inline std::array<std::uint32_t, kMaxDim> morton_decode(MortonKey key, int d, int j) {
  std::array<std::uint32_t, kMaxDim> k{};
  for (int bit = 0; bit < j; ++bit) {
    for (int axis = d - 1; axis >= 0; --axis) {
      k[axis] |= static_cast<std::uint32_t>(key & 1u) << bit;
      key >>= 1;
    }
  }
  return k;
}

}  // namespace hauslev
