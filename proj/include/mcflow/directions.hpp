#pragma once

#include "mcflow/linalg.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace mcflow {

/// Representatives of antipodal direction pairs in R^k: uniform angles on
/// [0, pi) for k = 2, a Fibonacci lattice on the upper hemisphere for k = 3.
inline std::vector<Vec> antipodal_directions(int k, int n) {
  if (n < k) throw std::invalid_argument("direction count must be at least the dimension");
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(n));
  if (k == 2) {
    for (int j = 0; j < n; ++j) {
      const double t = std::numbers::pi * j / n;
      Vec d(2);
      d << std::cos(t), std::sin(t);
      out.push_back(d);
    }
    return out;
  }
  if (k == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int j = 0; j < n; ++j) {
      const double z = (j + 0.5) / n;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * j;
      Vec d(3);
      d << r * std::cos(phi), r * std::sin(phi), z;
      out.push_back(d);
    }
    return out;
  }
  throw std::invalid_argument("direction sets are provided for dimensions 2 and 3");
}

inline int default_direction_count(int k) { return k == 2 ? 32 : 128; }

}  // namespace mcflow
