#include "hauslev/gridset_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hauslev/error.hpp"

namespace hauslev {

std::string gridset_to_json(const GridSet& set) {
  const int d = set.grid().d();
  std::string out = "{\"d\":" + std::to_string(d) + ",\"j\":" + std::to_string(set.grid().j()) +
                    ",\"cells\":[";
  bool first = true;
  for (const auto& c : set.cells()) {
    if (!first) out += ',';
    first = false;
    out += '[';
    for (int i = 0; i < d; ++i) {
      if (i) out += ',';
      out += std::to_string(c.k[i]);
    }
    out += ']';
  }
  out += "]}";
  return out;
}

GridSet gridset_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("grid set: ") + e.what());
  }
  auto int_field = [&](const char* name) {
    if (!doc.is_object() || !doc.contains(name) || !doc[name].is_number_integer()) {
      throw ParseError(std::string("grid set: missing integer field '") + name + "'");
    }
    return doc[name].get<long long>();
  };
  const long long d = int_field("d");
  const long long j = int_field("j");
  if (d < 1 || d > kMaxDim || j < 0 || j > 31 || j * d > 63) {
    throw ParseError("grid set: unsupported d=" + std::to_string(d) + " j=" + std::to_string(j));
  }
  const DyadicGrid grid(static_cast<int>(d), static_cast<int>(j));
  if (!doc.contains("cells") || !doc["cells"].is_array()) {
    throw ParseError("grid set: missing array field 'cells'");
  }
  std::vector<CellIndex> cells;
  cells.reserve(doc["cells"].size());
  std::size_t idx = 0;
  for (const auto& item : doc["cells"]) {
    if (!item.is_array() || item.size() != static_cast<std::size_t>(d)) {
      throw ParseError("grid set: cell " + std::to_string(idx) + " does not have d coordinates");
    }
    CellIndex c;
    for (int i = 0; i < d; ++i) {
      if (!item[i].is_number_unsigned() || item[i].get<unsigned long long>() >= grid.cells_per_axis()) {
        throw ParseError("grid set: cell " + std::to_string(idx) + " outside the grid");
      }
      c.k[i] = static_cast<std::uint32_t>(item[i].get<unsigned long long>());
    }
    cells.push_back(c);
    ++idx;
  }
  return GridSet(grid, cells);
}

void write_gridset(const std::filesystem::path& path, const GridSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  out << gridset_to_json(set) << '\n';
  if (!out) throw std::ios_base::failure("write failed: " + path.string());
}

GridSet read_gridset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return gridset_from_json(ss.str());
}

}  // namespace hauslev
