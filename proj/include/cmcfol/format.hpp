// Distributed under the MIT License.
// See LICENSE.txt for details.

#pragma once

#include <cstdio>
#include <string>

namespace cmcfol {

inline constexpr int schema_version = 1;

// Fixed 17-significant-digit formatting so report files are byte-stable
// across runs and platforms with the same libc.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace cmcfol
