#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace hauslev {

struct ConfigValue {
  std::string text;
  std::size_t line = 0;
};

/// Line-oriented `key = value` text; `#` starts a comment, blank lines are
/// skipped. Malformed lines and repeated keys throw ParseError with the line.
std::map<std::string, ConfigValue> parse_text_config(std::istream& in);
std::map<std::string, ConfigValue> read_text_config(const std::filesystem::path& path);

}  // namespace hauslev
