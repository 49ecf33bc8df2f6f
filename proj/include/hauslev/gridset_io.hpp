#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "hauslev/grid.hpp"

namespace hauslev {

/// {"d":..,"j":..,"cells":[[..],..]} with cells in lexicographic order, one line.
std::string gridset_to_json(const GridSet& set);

/// Throws ParseError on malformed text or cells outside the grid.
GridSet gridset_from_json(std::string_view text);

void write_gridset(const std::filesystem::path& path, const GridSet& set);
GridSet read_gridset(const std::filesystem::path& path);

}  // namespace hauslev
