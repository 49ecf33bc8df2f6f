#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace hauslev {

/// Shortest-form-agnostic %.17g rendering; round-trips every finite double.
inline std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// JSON has no inf/nan literals; those become null.
inline std::string json_number(double x) { return std::isfinite(x) ? fmt17(x) : "null"; }

}  // namespace hauslev
