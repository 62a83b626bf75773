#pragma once

// Radial discretisation of R^3: uniform origin-excluded nodes, trapezoid
// weights 4 pi r^2 dr, field storage and the norms every other module uses.

#include "hartree_lab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hlab {

inline constexpr double four_pi = 4.0 * std::numbers::pi;

class RadialGrid {
 public:
  RadialGrid(double r_max, std::size_t n) : r_max_(r_max), n_(n) {
    if (!(r_max > 0.0) || !std::isfinite(r_max)) {
      throw std::invalid_argument("RadialGrid: r_max must be positive and finite");
    }
    if (n < 4) throw std::invalid_argument("RadialGrid: need at least 4 nodes");
    dr_ = r_max_ / static_cast<double>(n_ + 1);
    nodes_.resize(n_);
    weights_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const double r = dr_ * static_cast<double>(i + 1);
      nodes_[i] = r;
      weights_[i] = four_pi * r * r * dr_;
    }
    spectral_ = std::make_shared<const SpectralOps>(n_, r_max_);
  }

  static std::shared_ptr<const RadialGrid> make(double r_max = 40.0, std::size_t n = 2048) {
    return std::make_shared<const RadialGrid>(r_max, n);
  }

  [[nodiscard]] double r_max() const { return r_max_; }
  [[nodiscard]] std::size_t size() const { return n_; }
  [[nodiscard]] double dr() const { return dr_; }
  [[nodiscard]] std::span<const double> nodes() const { return nodes_; }
  [[nodiscard]] std::span<const double> weights() const { return weights_; }
  [[nodiscard]] double node(std::size_t i) const { return nodes_[i]; }
  [[nodiscard]] double weight(std::size_t i) const { return weights_[i]; }
  [[nodiscard]] const SpectralOps& spectral() const { return *spectral_; }

  [[nodiscard]] bool same_as(const RadialGrid& other) const {
    return this == &other || (n_ == other.n_ && r_max_ == other.r_max_);
  }

 private:
  double r_max_;
  std::size_t n_;
  double dr_ = 0.0;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  std::shared_ptr<const SpectralOps> spectral_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

/// Complex radial profile u(r_i) on a shared grid. Value semantics.
class RadialField {
 public:
  RadialField() = default;
  explicit RadialField(GridPtr grid)
      : grid_(std::move(grid)), values_(grid_ ? grid_->size() : 0) {}
  RadialField(GridPtr grid, std::vector<complex> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_ || values_.size() != grid_->size()) {
      throw std::invalid_argument("RadialField: value count does not match grid");
    }
  }

  template <class F>
  static RadialField from_function(GridPtr grid, F&& f) {
    RadialField out(grid);
    for (std::size_t i = 0; i < grid->size(); ++i) out.values_[i] = complex(f(grid->node(i)));
    return out;
  }

  static RadialField from_real(GridPtr grid, std::span<const double> values) {
    RadialField out(grid);
    if (values.size() != out.size()) {
      throw std::invalid_argument("RadialField: value count does not match grid");
    }
    for (std::size_t i = 0; i < values.size(); ++i) out.values_[i] = values[i];
    return out;
  }

  [[nodiscard]] const RadialGrid& grid() const { return *grid_; }
  [[nodiscard]] const GridPtr& grid_ptr() const { return grid_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] std::span<const complex> values() const { return values_; }
  [[nodiscard]] std::span<complex> values() { return values_; }
  [[nodiscard]] std::vector<complex>& data() { return values_; }
  complex& operator[](std::size_t i) { return values_[i]; }
  const complex& operator[](std::size_t i) const { return values_[i]; }

  [[nodiscard]] std::vector<double> modulus() const {
    std::vector<double> out(values_.size());
    std::transform(values_.begin(), values_.end(), out.begin(),
                   [](complex z) { return std::abs(z); });
    return out;
  }
  [[nodiscard]] std::vector<double> real_part() const {
    std::vector<double> out(values_.size());
    std::transform(values_.begin(), values_.end(), out.begin(),
                   [](complex z) { return z.real(); });
    return out;
  }

  RadialField& operator*=(complex c) {
    for (auto& z : values_) z *= c;
    return *this;
  }
  friend RadialField operator*(complex c, RadialField f) { return f *= c; }
  friend RadialField operator*(RadialField f, complex c) { return f *= c; }

  RadialField& operator+=(const RadialField& other) {
    check_same_grid(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
  }
  friend RadialField operator+(RadialField a, const RadialField& b) { return a += b; }

  /// Pointwise multiplication by a real radial profile.
  template <class F>
  [[nodiscard]] RadialField multiplied_by(F&& profile) const {
    RadialField out = *this;
    for (std::size_t i = 0; i < values_.size(); ++i) out.values_[i] *= profile(grid_->node(i));
    return out;
  }

  void check_same_grid(const RadialField& other) const {
    if (!grid_ || !other.grid_ || !grid_->same_as(*other.grid_)) {
      throw std::invalid_argument("RadialField: grid mismatch");
    }
  }

 private:
  GridPtr grid_;
  std::vector<complex> values_;
};

enum class DifferenceScheme { central2, central4, spectral };

namespace detail {

// u(0) from the even extension u(r) = a + b r^2 + c r^4 through the first nodes.
inline complex origin_value(std::span<const complex> u) {
  return (15.0 * u[0] - 6.0 * u[1] + u[2]) / 10.0;
}

}  // namespace detail

/// Radial derivative u'(r_i). Finite-difference schemes use the even extension
/// at the origin (u(-r) = u(r)) and u = 0 beyond r_max.
inline std::vector<complex> radial_derivative(const RadialField& f,
                                              DifferenceScheme scheme = DifferenceScheme::central2) {
  const auto u = f.values();
  const std::size_t n = u.size();
  const double dr = f.grid().dr();
  if (scheme == DifferenceScheme::spectral) return f.grid().spectral().derivative(u);

  const complex u0 = detail::origin_value(u);
  // Sample at signed index j (node j has radius j*dr; j = 0 is the origin).
  auto at = [&](long j) -> complex {
    if (j < 0) j = -j;
    if (j == 0) return u0;
    if (j > static_cast<long>(n)) return complex{};
    return u[static_cast<std::size_t>(j - 1)];
  };
  std::vector<complex> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const long j = static_cast<long>(i + 1);
    if (scheme == DifferenceScheme::central2) {
      out[i] = (at(j + 1) - at(j - 1)) / (2.0 * dr);
    } else {
      out[i] = (-at(j + 2) + 8.0 * at(j + 1) - 8.0 * at(j - 1) + at(j - 2)) / (12.0 * dr);
    }
  }
  return out;
}

/// M(f) = int |f|^2 dx.
inline double l2_norm_sq(const RadialField& f) {
  const auto w = f.grid().weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += w[i] * std::norm(f[i]);
  return acc;
}

/// ||grad f||^2. The spectral scheme is exact for the sine-basis Laplacian used
/// by the time stepper; the finite-difference schemes are for convergence studies.
inline double grad_norm_sq(const RadialField& f,
                           DifferenceScheme scheme = DifferenceScheme::central2) {
  if (scheme == DifferenceScheme::spectral) return f.grid().spectral().kinetic_norm_sq(f.values());
  const auto d = radial_derivative(f, scheme);
  const auto w = f.grid().weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) acc += w[i] * std::norm(d[i]);
  return acc;
}

inline double mass_in_ball(const RadialField& f, double radius) {
  const auto& g = f.grid();
  if (!(radius > 0.0) || radius > g.r_max()) {
    throw std::out_of_range("mass_in_ball: radius must lie in (0, r_max]");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size() && g.node(i) <= radius; ++i) {
    acc += g.weight(i) * std::norm(f[i]);
  }
  return acc;
}

inline double lp_norm(const RadialField& f, double exponent) {
  if (!(exponent >= 1.0)) throw std::invalid_argument("lp_norm: exponent must be >= 1");
  const auto w = f.grid().weights();
  if (std::isinf(exponent)) {
    double m = 0.0;
    for (auto z : f.values()) m = std::max(m, std::abs(z));
    return m;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += w[i] * std::pow(std::abs(f[i]), exponent);
  return std::pow(acc, 1.0 / exponent);
}

inline double sup_norm(const RadialField& f) {
  return lp_norm(f, std::numeric_limits<double>::infinity());
}

/// sup_i r_i^s |f(r_i)|, the left side of the radial Sobolev inequality.
inline double weighted_sup(const RadialField& f, double s) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    m = std::max(m, std::pow(f.grid().node(i), s) * std::abs(f[i]));
  }
  return m;
}

inline double h1_norm_sq(const RadialField& f,
                         DifferenceScheme scheme = DifferenceScheme::spectral) {
  return l2_norm_sq(f) + grad_norm_sq(f, scheme);
}

/// Weighted inner product <f, g> = int conj(f) g dx.
inline complex inner(const RadialField& f, const RadialField& g) {
  f.check_same_grid(g);
  const auto w = f.grid().weights();
  complex acc{};
  for (std::size_t i = 0; i < f.size(); ++i) acc += w[i] * std::conj(f[i]) * g[i];
  return acc;
}

/// Indicator of the ball |x| <= radius, sampled as the volume fraction of each
/// node's cell [r - dr/2, r + dr/2] so that discrete integrals see a sharp ball.
inline RadialField ball_indicator(GridPtr grid, double radius, double height = 1.0) {
  RadialField out(grid);
  const double dr = grid->dr();
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const double lo = grid->node(i) - 0.5 * dr;
    const double hi = grid->node(i) + 0.5 * dr;
    double frac = 0.0;
    if (hi <= radius) {
      frac = 1.0;
    } else if (lo < radius) {
      frac = (std::pow(radius, 3) - std::pow(lo, 3)) / (std::pow(hi, 3) - std::pow(lo, 3));
    }
    out[i] = height * frac;
  }
  return out;
}

}  // namespace hlab
