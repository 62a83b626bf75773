#pragma once

// Radial external potentials V(r), the Kato norm, and audits of the
// hypotheses the scattering theorem places on V.

#include "hartree_lab/format.hpp"
#include "hartree_lab/grid.hpp"
#include "hartree_lab/riesz.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hlab {

enum class PotentialKind { zero, gaussian, inverse_power, step, table };

inline const char* to_string(PotentialKind k) {
  switch (k) {
    case PotentialKind::zero: return "zero";
    case PotentialKind::gaussian: return "gaussian";
    case PotentialKind::inverse_power: return "inverse_power";
    case PotentialKind::step: return "step";
    case PotentialKind::table: return "table";
  }
  return "?";
}

/// Radial potential. amplitude > 0 is repulsive.
///   gaussian       A exp(-(r - center)^2 / width^2)
///   inverse_power  A (r^2 + core^2)^{-power/2}
///   step           A for r < radius, 0 beyond
///   table          linear interpolation of (table_r, table_v), end values held
struct PotentialSpec {
  PotentialKind kind = PotentialKind::zero;
  double amplitude = 0.0;
  double width = 1.0;
  double center = 0.0;
  double power = 3.0;
  double core = 1.0;
  double radius = 1.0;
  std::vector<double> table_r;
  std::vector<double> table_v;

  static PotentialSpec zero() { return {}; }
  static PotentialSpec gaussian(double amplitude, double width, double center = 0.0) {
    PotentialSpec s;
    s.kind = PotentialKind::gaussian;
    s.amplitude = amplitude;
    s.width = width;
    s.center = center;
    return s;
  }
  static PotentialSpec inverse_power(double amplitude, double power, double core) {
    PotentialSpec s;
    s.kind = PotentialKind::inverse_power;
    s.amplitude = amplitude;
    s.power = power;
    s.core = core;
    return s;
  }
  static PotentialSpec step(double amplitude, double radius) {
    PotentialSpec s;
    s.kind = PotentialKind::step;
    s.amplitude = amplitude;
    s.radius = radius;
    return s;
  }
  static PotentialSpec table(std::vector<double> r, std::vector<double> v) {
    PotentialSpec s;
    s.kind = PotentialKind::table;
    s.table_r = std::move(r);
    s.table_v = std::move(v);
    return s;
  }

  void validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("potential: " + m); };
    if (!std::isfinite(amplitude)) fail("amplitude must be finite");
    switch (kind) {
      case PotentialKind::gaussian:
        if (!(width > 0.0)) fail("gaussian width must be positive");
        break;
      case PotentialKind::inverse_power:
        if (!(power > 0.0)) fail("inverse_power power must be positive");
        if (!(core > 0.0)) fail("inverse_power core must be positive");
        break;
      case PotentialKind::step:
        if (!(radius > 0.0)) fail("step radius must be positive");
        break;
      case PotentialKind::table:
        if (table_r.size() < 2 || table_r.size() != table_v.size()) {
          fail("table needs at least two (r, V) rows");
        }
        for (std::size_t i = 1; i < table_r.size(); ++i) {
          if (!(table_r[i] > table_r[i - 1])) fail("table radii must increase");
        }
        break;
      case PotentialKind::zero: break;
    }
  }

  [[nodiscard]] double value(double r) const {
    switch (kind) {
      case PotentialKind::zero: return 0.0;
      case PotentialKind::gaussian: {
        const double x = (r - center) / width;
        return amplitude * std::exp(-x * x);
      }
      case PotentialKind::inverse_power:
        return amplitude * std::pow(r * r + core * core, -0.5 * power);
      case PotentialKind::step: return r < radius ? amplitude : 0.0;
      case PotentialKind::table: {
        if (r <= table_r.front()) return table_v.front();
        if (r >= table_r.back()) return table_v.back();
        const std::size_t k = segment(r);
        const double t = (r - table_r[k]) / (table_r[k + 1] - table_r[k]);
        return (1.0 - t) * table_v[k] + t * table_v[k + 1];
      }
    }
    return 0.0;
  }

  /// dV/dr. The step's jump is not represented.
  [[nodiscard]] double derivative(double r) const {
    switch (kind) {
      case PotentialKind::zero:
      case PotentialKind::step: return 0.0;
      case PotentialKind::gaussian: {
        const double x = (r - center) / width;
        return -2.0 * x / width * amplitude * std::exp(-x * x);
      }
      case PotentialKind::inverse_power:
        return -power * r * amplitude * std::pow(r * r + core * core, -0.5 * power - 1.0);
      case PotentialKind::table: {
        if (r < table_r.front() || r > table_r.back()) return 0.0;
        const std::size_t k = std::min(segment(r), table_r.size() - 2);
        return (table_v[k + 1] - table_v[k]) / (table_r[k + 1] - table_r[k]);
      }
    }
    return 0.0;
  }

  /// Algebraic decay rate of |V| at infinity (+inf for faster than any power).
  [[nodiscard]] double tail_exponent() const {
    if (kind == PotentialKind::inverse_power && amplitude != 0.0) return power;
    if (kind == PotentialKind::table && table_v.back() != 0.0) return 0.0;
    return std::numeric_limits<double>::infinity();
  }

  /// Radii where V or V' is not smooth, or where mass concentrates.
  [[nodiscard]] std::vector<double> breakpoints() const {
    std::vector<double> b;
    switch (kind) {
      case PotentialKind::gaussian:
        for (double k : {-4.0, -1.0, 0.0, 1.0, 4.0}) b.push_back(center + k * width);
        break;
      case PotentialKind::inverse_power: b = {core, 10.0 * core}; break;
      case PotentialKind::step: b = {radius}; break;
      case PotentialKind::table: b = table_r; break;
      case PotentialKind::zero: break;
    }
    std::erase_if(b, [](double x) { return !(x > 0.0); });
    std::sort(b.begin(), b.end());
    return b;
  }

  [[nodiscard]] std::vector<double> sample(const RadialGrid& g) const {
    std::vector<double> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = value(g.node(i));
    return out;
  }
  [[nodiscard]] std::vector<double> sample_derivative(const RadialGrid& g) const {
    std::vector<double> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = derivative(g.node(i));
    return out;
  }

  [[nodiscard]] bool is_zero() const {
    return kind == PotentialKind::zero || (kind != PotentialKind::table && amplitude == 0.0);
  }

  [[nodiscard]] std::string describe() const {
    std::string out = to_string(kind);
    switch (kind) {
      case PotentialKind::gaussian:
        out += ":amplitude=" + shortest(amplitude) + ",width=" + shortest(width) + ",center=" + shortest(center);
        break;
      case PotentialKind::inverse_power:
        out += ":amplitude=" + shortest(amplitude) + ",power=" + shortest(power) + ",core=" + shortest(core);
        break;
      case PotentialKind::step: out += ":amplitude=" + shortest(amplitude) + ",radius=" + shortest(radius); break;
      case PotentialKind::table: out += ":rows=" + std::to_string(table_r.size()); break;
      case PotentialKind::zero: break;
    }
    return out;
  }

 private:
  [[nodiscard]] std::size_t segment(double r) const {
    const auto it = std::upper_bound(table_r.begin(), table_r.end(), r);
    return static_cast<std::size_t>(std::max<long>(0, (it - table_r.begin()) - 1));
  }
};

/// Parses "kind" or "kind:key=value,key=value". Table data is not accepted here.
inline PotentialSpec parse_potential(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  PotentialSpec s;
  if (kind == "zero") s.kind = PotentialKind::zero;
  else if (kind == "gaussian") s.kind = PotentialKind::gaussian;
  else if (kind == "inverse_power") s.kind = PotentialKind::inverse_power;
  else if (kind == "step") s.kind = PotentialKind::step;
  else throw std::invalid_argument("potential: unknown kind '" + kind + "'");
  if (colon != std::string::npos) {
    std::stringstream rest(text.substr(colon + 1));
    std::string item;
    while (std::getline(rest, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("potential: expected key=value, got '" + item + "'");
      const std::string key = item.substr(0, eq);
      double v = 0.0;
      try {
        std::size_t used = 0;
        v = std::stod(item.substr(eq + 1), &used);
        if (used != item.size() - eq - 1) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw std::invalid_argument("potential: bad number in '" + item + "'");
      }
      if (key == "amplitude") s.amplitude = v;
      else if (key == "width") s.width = v;
      else if (key == "center") s.center = v;
      else if (key == "power") s.power = v;
      else if (key == "core") s.core = v;
      else if (key == "radius") s.radius = v;
      else throw std::invalid_argument("potential: unknown key '" + key + "'");
    }
  }
  s.validate();
  return s;
}

namespace detail {

// int_a^b f over consecutive breakpoints with adaptive Gauss-Kronrod.
template <class F>
double piecewise_integral(F&& f, double a, double b, const std::vector<double>& breaks) {
  using boost::math::quadrature::gauss_kronrod;
  double acc = 0.0;
  double lo = a;
  auto piece = [&](double x0, double x1) {
    if (x1 > x0) acc += gauss_kronrod<double, 31>::integrate(f, x0, x1, 20, 1e-13);
  };
  for (double x : breaks) {
    if (x > lo && x < b) {
      piece(lo, x);
      lo = x;
    }
  }
  piece(lo, b);
  return acc;
}

}  // namespace detail

struct KatoResult {
  double norm = 0.0;         // sup over probes
  double argmax_radius = 0.0;
  std::vector<double> probes;
  std::vector<double> values;
  bool tail_converged = true;
};

/// Kato integral of |V| (or of its negative part) seen from a point at distance x
/// from the origin: (4 pi / x) int_0^x s^2 |V| ds + 4 pi int_x^inf s |V| ds.
inline double kato_integral(const PotentialSpec& V, double x, double r_max, bool negative_part = false) {
  auto mag = [&](double s) {
    const double v = V.value(s);
    return negative_part ? std::max(-v, 0.0) : std::abs(v);
  };
  const auto breaks = V.breakpoints();
  const double pi4 = 4.0 * std::numbers::pi;
  double inner = 0.0;
  if (x > 0.0) {
    inner = pi4 / x * detail::piecewise_integral([&](double s) { return s * s * mag(s); }, 0.0, x, breaks);
  }
  double outer = detail::piecewise_integral([&](double s) { return s * mag(s); }, x, r_max, breaks);
  if (V.tail_exponent() > 2.0 && std::isfinite(V.tail_exponent())) {
    using boost::math::quadrature::gauss_kronrod;
    outer += gauss_kronrod<double, 31>::integrate([&](double s) { return s * mag(s); }, std::max(x, r_max),
                                                  std::numeric_limits<double>::infinity(), 20, 1e-13);
  }
  return inner + pi4 * outer;
}

/// sup_x int |V(y)| / |x - y| dy over 64 probe radii: the origin and 63
/// log-spaced radii in [dr, r_max/2].
inline KatoResult kato_norm(const PotentialSpec& V, const RadialGrid& grid, bool negative_part = false) {
  KatoResult out;
  out.probes.push_back(0.0);
  const double lo = std::log(grid.dr());
  const double hi = std::log(0.5 * grid.r_max());
  for (int k = 0; k < 63; ++k) out.probes.push_back(std::exp(lo + (hi - lo) * k / 62.0));
  for (double x : out.probes) {
    const double v = kato_integral(V, x, grid.r_max(), negative_part);
    out.values.push_back(v);
    if (v > out.norm) {
      out.norm = v;
      out.argmax_radius = x;
    }
  }
  out.tail_converged = V.tail_exponent() > 2.0;
  return out;
}

struct PotentialAudit {
  double kato_norm = 0.0;
  double kato_argmax = 0.0;
  double kato_norm_negative_part = 0.0;
  double l32_norm = 0.0;
  double l32_norm_quadrature = 0.0;
  bool nonneg = true;
  bool radial_derivative_sign = true;  // x . grad V <= 0
  std::map<double, double> x_grad_V_lr_norms;
  bool kato_finite = true;
  bool l32_finite = true;
  bool kato_smallness = true;  // ||V_-||_K < 4 pi
  std::vector<std::string> failures;

  [[nodiscard]] bool theorem_hypotheses() const { return failures.empty(); }
};

inline PotentialAudit audit_hypotheses(const PotentialSpec& V, const RadialGrid& grid,
                                       const std::vector<double>& r_exponents = {1.5, 2.0, 3.0,
                                                                                 std::numeric_limits<double>::infinity()}) {
  V.validate();
  PotentialAudit a;
  const auto full = kato_norm(V, grid);
  a.kato_norm = full.norm;
  a.kato_argmax = full.argmax_radius;
  a.kato_norm_negative_part = kato_norm(V, grid, true).norm;
  a.kato_finite = full.tail_converged;
  const double tail = V.tail_exponent();
  a.l32_finite = tail > 2.0;

  const auto w = grid.weights();
  double l32 = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid.node(i);
    const double v = V.value(r);
    const double rv = r * V.derivative(r);
    l32 += w[i] * std::pow(std::abs(v), 1.5);
    if (v < -1e-12) a.nonneg = false;
    if (rv > 1e-12) a.radial_derivative_sign = false;
  }
  a.l32_norm = std::pow(l32, 2.0 / 3.0);
  const double l32q = 4.0 * std::numbers::pi *
                      detail::piecewise_integral(
                          [&](double s) { return s * s * std::pow(std::abs(V.value(s)), 1.5); }, 0.0,
                          grid.r_max(), V.breakpoints());
  a.l32_norm_quadrature = std::pow(l32q, 2.0 / 3.0);

  for (double q : r_exponents) {
    if (!(q >= 1.5)) throw std::invalid_argument("audit: x.gradV exponents must be >= 3/2");
    double norm = 0.0;
    if (std::isinf(q)) {
      for (std::size_t i = 0; i < grid.size(); ++i) {
        norm = std::max(norm, std::abs(grid.node(i) * V.derivative(grid.node(i))));
      }
    } else {
      double acc = 0.0;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        acc += w[i] * std::pow(std::abs(grid.node(i) * V.derivative(grid.node(i))), q);
      }
      norm = std::pow(acc, 1.0 / q);
      // r V' decays like r^-tail; it lies in L^q iff q * tail > 3.
      if (!(q * tail > 3.0)) {
        a.failures.push_back("x.gradV not in L^" + shortest(q) + " (tail ~ r^-" + shortest(tail) + ")");
      }
    }
    a.x_grad_V_lr_norms[q] = norm;
  }
  a.kato_smallness = a.kato_norm_negative_part < 4.0 * std::numbers::pi;

  if (!a.nonneg) a.failures.emplace_back("V >= 0 fails");
  if (!a.radial_derivative_sign) a.failures.emplace_back("x.gradV <= 0 fails");
  if (!a.kato_finite) a.failures.emplace_back("V not in the Kato class (tail too slow)");
  if (!a.l32_finite) a.failures.emplace_back("V not in L^{3/2} (tail too slow)");
  if (!a.kato_smallness) a.failures.emplace_back("||V_-||_K < 4 pi fails");
  return a;
}

struct EnergyReport {
  double E = 0.0;
  double E0 = 0.0;
  double lambda_norm_sq = 0.0;
  double grad_sq = 0.0;
  double P = 0.0;
  double potential_term = 0.0;  // int V |u|^2
};

/// E = E0 + (1/2) int V|u|^2 with E0 = (1/2)||grad u||^2 - P/(2p).
inline EnergyReport energy(const RadialField& u, const std::vector<double>& V_nodes, const RieszKernel& kern,
                           double p, DifferenceScheme scheme = DifferenceScheme::spectral) {
  EnergyReport e;
  e.grad_sq = grad_norm_sq(u, scheme);
  e.P = potential_energy(kern, u, p);
  const auto w = u.grid().weights();
  for (std::size_t i = 0; i < u.size(); ++i) e.potential_term += w[i] * V_nodes[i] * std::norm(u[i]);
  e.E0 = 0.5 * e.grad_sq - e.P / (2.0 * p);
  e.E = e.E0 + 0.5 * e.potential_term;
  e.lambda_norm_sq = e.grad_sq + e.potential_term;
  return e;
}

inline EnergyReport energy(const RadialField& u, const PotentialSpec& V, const RieszKernel& kern, double p,
                           DifferenceScheme scheme = DifferenceScheme::spectral) {
  return energy(u, V.sample(u.grid()), kern, p, scheme);
}

struct NamedPotential {
  std::string name;
  PotentialSpec V;
  bool expected_to_pass = true;  // repulsive example or counterexample
};

/// Potentials shipped with the tool: four that satisfy every hypothesis of the
/// scattering theorem, and four that each break one of them.
inline std::vector<NamedPotential> shipped_potentials() {
  return {
      {"repulsive_gaussian", PotentialSpec::gaussian(0.5, 2.0), true},
      {"unit_gaussian", PotentialSpec::gaussian(1.0, 1.0), true},
      {"inverse_cube", PotentialSpec::inverse_power(1.0, 3.0, 1.0), true},
      {"inverse_quartic", PotentialSpec::inverse_power(2.0, 4.0, 0.7), true},
      {"attractive_gaussian", PotentialSpec::gaussian(-1.0, 1.0), false},
      {"deep_well", PotentialSpec::gaussian(-3.0, 1.0), false},
      {"gaussian_shell", PotentialSpec::gaussian(1.0, 1.0, 3.0), false},
      {"coulomb_tail", PotentialSpec::inverse_power(1.0, 1.0, 1.0), false},
  };
}

}  // namespace hlab
