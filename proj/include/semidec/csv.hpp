#pragma once

#include <cstdio>
#include <string>

namespace semidec {

// Shortest-exact decimal rendering used by every CSV writer: 17 significant
// digits round-trip any double, so re-reading a file reproduces the value
// bit for bit.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

}  // namespace semidec
