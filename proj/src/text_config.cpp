#include "hauslev/text_config.hpp"

#include <fstream>
#include <istream>

#include "hauslev/error.hpp"

namespace hauslev {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::map<std::string, ConfigValue> parse_text_config(std::istream& in) {
  std::map<std::string, ConfigValue> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("config: expected 'key = value'", lineno);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("config: empty key", lineno);
    if (out.count(key)) throw ParseError("config: duplicate key '" + key + "'", lineno);
    out[key] = {value, lineno};
  }
  return out;
}

std::map<std::string, ConfigValue> read_text_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot read " + path.string());
  return parse_text_config(in);
}

}  // namespace hauslev
