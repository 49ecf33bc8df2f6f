#pragma once

#include <random>
#include <vector>

#include "hauslev/grid.hpp"

namespace gen {

// Random grid set with up to max_cells members at level j.
inline hauslev::GridSet grid_set(std::mt19937_64& rng, int d, int j, std::size_t max_cells, bool allow_empty = true) {
  const hauslev::DyadicGrid grid(d, j);
  const std::uint64_t total = grid.total_cells();
  std::uniform_int_distribution<std::size_t> count(allow_empty ? 0 : 1, std::min<std::uint64_t>(max_cells, total));
  std::uniform_int_distribution<std::uint64_t> key(0, total - 1);
  std::vector<hauslev::MortonKey> keys(count(rng));
  for (auto& k : keys) k = key(rng);
  return hauslev::GridSet::from_keys(grid, keys);
}

inline int level(std::mt19937_64& rng, int d) {
  const int top = d == 1 ? 9 : (d == 2 ? 5 : 3);
  return std::uniform_int_distribution<int>(0, top)(rng);
}

}  // namespace gen
