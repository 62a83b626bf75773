#pragma once

// Virial/Morawetz weights a(r) and the weighted quantities
//   z   = int a |u|^2,
//   z'  = 2 Im int a' conj(u) u_r,
//   z'' = 4 int a'' |u_r|^2 - int (Lap^2 a) |u|^2 - 2 int a' V' |u|^2
//         - 4 (1/2 - 1/p) int (Lap a) g h + (4/p) int a' g h_r,
// with g = |u|^p and h = I_gamma * g. The last term is the radial form of the
// symmetrised double integral; h_r comes from the kernel's slope path.

#include "hartree_lab/grid.hpp"
#include "hartree_lab/potentials.hpp"
#include "hartree_lab/riesz.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace hlab {

enum class WeightKind { quadratic, truncated };

inline const char* to_string(WeightKind k) { return k == WeightKind::quadratic ? "quadratic" : "truncated"; }

struct WeightSpec {
  WeightKind kind = WeightKind::quadratic;
  double R = 0.0;
  double band = 0.0;  // 0 means R/100
};

struct WeightJet {
  double a, d1, d2, d3, d4;
};

namespace detail {

// Smooth step S(x) = I_x(7,7): 0 for x <= 0, 1 for x >= 1, six continuous derivatives.
inline constexpr double step_order = 7.0;

inline WeightJet truncated_jet(double r, double R, double band) {
  const double lo = 0.5 * R - band;
  const double hi = 0.5 * R + band;
  const double w = 2.0 * band;
  // a'' = 2 (1 - S((r - lo)/w)) keeps a'' >= 0; the band integral of a'' equals the
  // sharp one, so a' = R beyond the band.
  // m2 is the second moment of Beta(k,k); it closes the double integral of S.
  const double k = step_order;
  const double m2 = k * (k + 1.0) / (2.0 * k * (2.0 * k + 1.0));
  auto tail_const = [&]() {
    const double a_hi = lo * lo + 2.0 * lo * w + w * w * (1.0 - m2);
    return a_hi - R * hi;
  };
  if (r <= lo) return {r * r, 2.0 * r, 2.0, 0.0, 0.0};
  if (r >= hi) return {R * r + tail_const(), R, 0.0, 0.0, 0.0};
  const double x = (r - lo) / w;
  const double S = boost::math::ibeta(k, k, x);
  const double dS = boost::math::ibeta_derivative(k, k, x);
  const double Bkk = boost::math::beta(k, k);
  const double ddS = (k - 1.0) * (std::pow(x, k - 2.0) * std::pow(1.0 - x, k - 1.0) -
                                  std::pow(x, k - 1.0) * std::pow(1.0 - x, k - 2.0)) / Bkk;
  // I(x) = int_0^x (1 - S) and J(x) = int_0^x I, via Beta moments:
  // int_0^x S = x S(x) - (1/2) I_x(k+1,k), int_0^x t S = (x^2 S - m2 I_x(k+2,k)) / 2.
  const double intS = x * S - 0.5 * boost::math::ibeta(k + 1.0, k, x);
  const double intTS = 0.5 * (x * x * S - m2 * boost::math::ibeta(k + 2.0, k, x));
  const double I = x - intS;
  const double J = 0.5 * x * x - (x * intS - intTS);
  return {lo * lo + 2.0 * lo * w * x + 2.0 * w * w * J, 2.0 * lo + 2.0 * w * I, 2.0 * (1.0 - S),
          -2.0 * dS / w, -2.0 * ddS / (w * w)};
}

}  // namespace detail

class MorawetzWeight {
 public:
  MorawetzWeight() = default;

  /// a = r^2 on the whole grid.
  static MorawetzWeight quadratic(const RadialGrid& grid) {
    MorawetzWeight w;
    w.kind_ = WeightKind::quadratic;
    w.fill(grid);
    return w;
  }

  /// a = r^2 inside R/2, R r - R^2/4 outside, mollified over [R/2 - band, R/2 + band].
  static MorawetzWeight truncated(double R, const RadialGrid& grid, double band = 0.0) {
    if (!(R > 0.0) || !(R < grid.r_max())) throw std::invalid_argument("morawetz weight: need 0 < R < r_max");
    if (band == 0.0) band = R / 100.0;
    if (!(band > 0.0 && band < R / 2.0)) throw std::invalid_argument("morawetz weight: need 0 < band < R/2");
    MorawetzWeight w;
    w.kind_ = WeightKind::truncated;
    w.R_ = R;
    w.band_ = band;
    w.fill(grid);
    return w;
  }

  static MorawetzWeight from_spec(const WeightSpec& s, const RadialGrid& grid) {
    return s.kind == WeightKind::quadratic ? quadratic(grid) : truncated(s.R, grid, s.band);
  }

  [[nodiscard]] WeightJet jet(double r) const {
    if (kind_ == WeightKind::quadratic) return {r * r, 2.0 * r, 2.0, 0.0, 0.0};
    return detail::truncated_jet(r, R_, band_);
  }

  [[nodiscard]] WeightKind kind() const { return kind_; }
  [[nodiscard]] double R() const { return R_; }
  [[nodiscard]] double band() const { return band_; }
  [[nodiscard]] const std::vector<double>& a() const { return a_; }
  [[nodiscard]] const std::vector<double>& da() const { return da_; }
  [[nodiscard]] const std::vector<double>& d2a() const { return d2a_; }
  [[nodiscard]] const std::vector<double>& lap() const { return lap_; }
  [[nodiscard]] const std::vector<double>& bilap() const { return bilap_; }

 private:
  void fill(const RadialGrid& grid) {
    const std::size_t n = grid.size();
    a_.resize(n);
    da_.resize(n);
    d2a_.resize(n);
    lap_.resize(n);
    bilap_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = grid.node(i);
      const auto j = jet(r);
      a_[i] = j.a;
      da_[i] = j.d1;
      d2a_[i] = j.d2;
      lap_[i] = j.d2 + 2.0 * j.d1 / r;
      // radial Lap^2 a = a'''' + 4 a'''/r
      bilap_[i] = j.d4 + 4.0 * j.d3 / r;
    }
  }

  WeightKind kind_ = WeightKind::quadratic;
  double R_ = 0.0;
  double band_ = 0.0;
  std::vector<double> a_, da_, d2a_, lap_, bilap_;
};

inline MorawetzWeight build_weight(double R, const RadialGrid& grid, double band = 0.0) {
  return MorawetzWeight::truncated(R, grid, band);
}

struct MorawetzZ {
  double z = 0.0;
  double zp = 0.0;
};

inline MorawetzZ morawetz_z(const RadialField& u, const MorawetzWeight& w) {
  if (w.a().size() != u.size()) throw std::invalid_argument("morawetz: weight and field sizes differ");
  const auto du = radial_derivative(u, DifferenceScheme::spectral);
  const auto wt = u.grid().weights();
  MorawetzZ out;
  for (std::size_t i = 0; i < u.size(); ++i) {
    out.z += wt[i] * w.a()[i] * std::norm(u[i]);
    out.zp += wt[i] * w.da()[i] * (std::conj(u[i]) * du[i]).imag();
  }
  out.zp *= 2.0;
  return out;
}

struct ZppTerms {
  double kinetic = 0.0;      // 4 int a'' |u_r|^2
  double bilaplacian = 0.0;  // -int Lap^2 a |u|^2
  double potential = 0.0;    // -2 int a' V' |u|^2
  double nonlocal = 0.0;
  double total = 0.0;
  double P = 0.0;  // int g h, a by-product
};

inline ZppTerms morawetz_zpp_terms(const RadialField& u, const MorawetzWeight& w, const std::vector<double>& dV,
                                   const RieszKernel& kern, double p) {
  if (w.a().size() != u.size() || dV.size() != u.size()) {
    throw std::invalid_argument("morawetz: weight, potential and field sizes differ");
  }
  const auto du = radial_derivative(u, DifferenceScheme::spectral);
  const auto g = modulus_power(u, p);
  const auto hs = kern.convolve_with_slope(g);
  const auto wt = u.grid().weights();
  ZppTerms t;
  double lap_term = 0.0;
  double slope_term = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double m = std::norm(u[i]);
    t.kinetic += wt[i] * w.d2a()[i] * std::norm(du[i]);
    t.bilaplacian -= wt[i] * w.bilap()[i] * m;
    t.potential -= wt[i] * w.da()[i] * dV[i] * m;
    lap_term += wt[i] * w.lap()[i] * g[i] * hs.h[i];
    slope_term += wt[i] * w.da()[i] * g[i] * hs.dh[i];
    t.P += wt[i] * g[i] * hs.h[i];
  }
  t.kinetic *= 4.0;
  t.potential *= 2.0;
  t.nonlocal = -4.0 * (0.5 - 1.0 / p) * lap_term + 4.0 / p * slope_term;
  t.total = t.kinetic + t.bilaplacian + t.potential + t.nonlocal;
  return t;
}

inline double morawetz_zpp(const RadialField& u, const MorawetzWeight& w, const PotentialSpec& V,
                           const RieszKernel& kern, double p) {
  return morawetz_zpp_terms(u, w, V.sample_derivative(u.grid()), kern, p).total;
}

}  // namespace hlab
