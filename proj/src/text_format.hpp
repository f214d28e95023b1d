#pragma once

#include <cstdio>
#include <string>

namespace methsnp {

// Fixed 17-significant-digit rendering used by every text output.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace methsnp
