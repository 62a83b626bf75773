#pragma once

#include "hartree_lab/grid.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <complex>
#include <limits>
#include <random>

namespace hlab::oracle {

// Sum of 1-3 Gaussian bumps with random centres, widths and phases.
inline RadialField random_smooth_field(const GridPtr& grid, std::mt19937_64& rng, double max_center = 8.0) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 3);
  struct Bump {
    double a, c, w, phase;
  };
  std::vector<Bump> bumps(static_cast<std::size_t>(count(rng)));
  for (auto& b : bumps) {
    b = {0.2 + unit(rng), max_center * unit(rng), 0.6 + 2.0 * unit(rng), 6.283185307179586 * unit(rng)};
  }
  return RadialField::from_function(grid, [&](double r) {
    complex acc{};
    for (const auto& b : bumps) {
      // even in r, so the field is smooth through the origin
      const double e = std::exp(-std::pow((r - b.c) / b.w, 2)) + std::exp(-std::pow((r + b.c) / b.w, 2));
      acc += b.a * e * std::polar(1.0, b.phase);
    }
    return acc;
  });
}

template <class F>
double integrate(F&& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 25, 1e-14);
}

}  // namespace hlab::oracle
