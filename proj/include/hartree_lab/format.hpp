#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace hlab {

/// Shortest round-trip decimal form of x ("inf", "-inf", "nan" for non-finite values).
inline std::string shortest(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return {buf, res.ptr};
}

}  // namespace hlab
