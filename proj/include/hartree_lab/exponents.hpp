#pragma once

// Exponent bookkeeping for the 3D generalized Hartree equation.
// Every quantity is a rational function of (p, gamma, eps); the templates
// accept any ordered field (double, boost::rational, ...) so the identities
// can be checked exactly.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace hlab {

class ExponentError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

template <class Real>
double as_double(const Real& x) {
  if constexpr (std::is_arithmetic_v<Real>) {
    return static_cast<double>(x);
  } else {
    return static_cast<double>(x.numerator()) / static_cast<double>(x.denominator());
  }
}

struct ModelParams {
  double p = 3.0;
  double gamma = 2.0;
  double epsilon = 1e-3;

  [[nodiscard]] bool intercritical() const {
    return (5.0 + gamma) / 3.0 < p && p < 3.0 + gamma;
  }

  void validate() const {
    if (!(p >= 2.0)) throw ExponentError("p >= 2 required");
    if (!(gamma > 0.0 && gamma < 3.0)) throw ExponentError("0 < gamma < 3 required");
    if (!(epsilon >= 0.0 && epsilon < 0.1)) throw ExponentError("0 <= eps < 1/10 required");
  }
};

template <class Real>
Real critical_exponent(const Real& p, const Real& gamma) {
  if (!(p > Real(1))) throw ExponentError("critical_exponent: p > 1 required");
  return Real(3) / Real(2) - (gamma + Real(2)) / (Real(2) * (p - Real(1)));
}

inline double critical_exponent(const ModelParams& m) { return critical_exponent(m.p, m.gamma); }

template <class Real>
struct ABExponents {
  Real A, B, sigma_c;
};

template <class Real>
ABExponents<Real> ab_exponents(const Real& p, const Real& gamma) {
  const Real sc = critical_exponent(p, gamma);
  if (!(sc > Real(0) && sc < Real(1))) {
    throw ExponentError("ab_exponents: s_c must lie in (0,1) (intercritical window)");
  }
  return {Real(3) + gamma - p, Real(3) * p - Real(3) - gamma, (Real(1) - sc) / sc};
}

inline ABExponents<double> ab_exponents(const ModelParams& m) { return ab_exponents(m.p, m.gamma); }

/// L^2 admissibility: 2/q + 3/r = 3/2 with q >= 2, 2 <= r <= 6. q may be +inf.
inline bool is_l2_admissible(double q, double r, double tol = 1e-12) {
  if (!(q > 0.0 && r > 0.0)) return false;
  const double defect = 2.0 / q + 3.0 / r - 1.5;
  return std::abs(defect) <= tol * 1.5 && q >= 2.0 && r >= 2.0 && r <= 6.0;
}

/// S(H^s) admissibility: 2/q + 3/r = 3/2 - s, q >= 2/(1-s), 6/(3-2s) <= r < 6.
inline bool is_hs_admissible(double q, double r, double s, double tol = 1e-12) {
  if (!(q > 0.0 && r > 0.0 && s > 0.0 && s < 1.0)) return false;
  const double defect = 2.0 / q + 3.0 / r - (1.5 - s);
  return std::abs(defect) <= tol * 1.5 && q >= 2.0 / (1.0 - s) && r >= 6.0 / (3.0 - 2.0 * s) &&
         r < 6.0;
}

/// The three exponents of the distant-past interpolation. k may be infinite,
/// so its reciprocal is stored.
template <class Real>
struct DistantPast {
  Real theta;
  Real l;
  Real inv_k;
  Real p_bar;

  [[nodiscard]] double k() const {
    return inv_k == Real(0) ? std::numeric_limits<double>::infinity() : 1.0 / as_double(inv_k);
  }
};

template <class Real>
DistantPast<Real> distant_past_pairs(const Real& p, const Real& gamma, const Real& eps) {
  const Real one(1), two(2), three(3), four(4), six(6);
  const Real sc = critical_exponent(p, gamma);
  if (!(sc > Real(0) && sc < one)) throw ExponentError("distant_past_pairs: not intercritical");
  const Real r_bar = Real(12) * (p - one) / (three + two * gamma - two * eps);

  DistantPast<Real> out{};
  // l = 2 (k = inf) whenever theta sits at 2/r_bar; kept exact rather than rounded.
  bool at_two = p >= (gamma + four) / two;
  if (at_two) {
    out.theta = two / r_bar;
  } else {
    const Real theta0 = (gamma + four - two * p) / (p - one);
    Real lo = theta0;
    if (two / r_bar > lo) {
      lo = two / r_bar;
      at_two = true;
    }
    Real hi = one;
    if (six / r_bar < hi) hi = six / r_bar;
    if ((two + gamma) / (three * (p - one)) < hi) hi = (two + gamma) / (three * (p - one));
    if (!(lo < hi)) throw ExponentError("distant_past_pairs: no theta satisfies l in [2,6] and p_bar > 0");
    // theta0^+: the same eps that perturbs the pairs moves theta into the open interval.
    out.theta = lo == theta0 ? lo + eps * (hi - lo) : lo;
  }
  if (!(out.theta > Real(0) && out.theta < one)) throw ExponentError("distant_past_pairs: theta not in (0,1)");
  out.l = at_two ? two : r_bar * out.theta;
  if (!(out.l >= two && out.l <= six)) throw ExponentError("distant_past_pairs: l = r_bar*theta not in [2,6]");
  out.inv_k = at_two ? Real(0) : Real(3) / four - three / (two * out.l);
  const Real denom = two + gamma - three * out.theta * (p - one);
  if (!(denom > Real(0))) throw ExponentError("distant_past_pairs: p_bar denominator not positive");
  out.p_bar = four * (one - out.theta) * (p - one) / denom;
  if (!(out.p_bar > two)) {
    throw ExponentError("distant_past_pairs: p_bar > 2 fails (theta0^+ needs eps > 0)");
  }
  return out;
}

template <class Real>
struct ExponentSetT {
  Real s_c, sigma_c, A, B;
  Real r_bar, a_bar, p_tilde, r3_minus, q4_plus;
  Real q, r, m, n, s;
  Real theta, theta_bar;
  DistantPast<Real> distant;
};

using ExponentSet = ExponentSetT<double>;

template <class Real>
ExponentSetT<Real> scattering_pairs(const Real& p, const Real& gamma, const Real& eps) {
  const Real one(1), two(2), three(3), four(4), eight(8), twelve(12);
  if (!(eps >= Real(0))) throw ExponentError("scattering_pairs: eps >= 0 required");
  ExponentSetT<Real> e{};
  e.s_c = critical_exponent(p, gamma);
  const auto ab = ab_exponents(p, gamma);
  e.A = ab.A;
  e.B = ab.B;
  e.sigma_c = ab.sigma_c;

  const Real den_r = three + two * gamma - two * eps;
  if (!(den_r > Real(0)) || !(one - two * eps > Real(0))) {
    throw ExponentError("scattering_pairs: eps too large for the perturbed pairs");
  }
  e.r_bar = twelve * (p - one) / den_r;
  e.a_bar = eight * (p - one) / (one + two * eps);
  e.p_tilde = twelve * (p - one) / (Real(6) * p - Real(7) - two * eps);
  e.r3_minus = three / (one + eps);
  e.q4_plus = four / (one - two * eps);
  e.q = eight * (gamma + two) / (three * (one + two * eps));
  e.r = four * (gamma + two) / den_r;
  e.m = three * e.q;
  e.n = three * e.r;
  e.s = three * e.n / (three + e.n);
  e.theta = three * (e.r - two) / (two * e.r);
  e.theta_bar = two / e.r;

  auto require = [](bool ok, const char* what) {
    if (!ok) throw ExponentError(std::string("scattering_pairs: ") + what);
  };
  require(e.r_bar > Real(0), "r_bar must be positive");
  require(e.p_tilde >= two && e.p_tilde <= Real(6), "p_tilde not in [2,6]");
  require(e.r >= two && e.r <= Real(6), "r not in [2,6]");
  require(e.r3_minus >= two, "3^- below 2");
  require(e.s >= two && e.s < three, "s not in [2,3)");
  require(e.theta > Real(0) && e.theta < one, "theta not in (0,1)");
  require(e.theta_bar > Real(0) && e.theta_bar < one, "theta_bar not in (0,1)");
  require(e.theta < e.theta_bar, "theta < theta_bar fails");
  e.distant = distant_past_pairs(p, gamma, eps);
  return e;
}

inline ExponentSet scattering_pairs(const ModelParams& m) {
  m.validate();
  return scattering_pairs(m.p, m.gamma, m.epsilon);
}

struct IdentityCheck {
  std::string name;
  double defect;  // relative
  bool pass;
};

/// Every algebraic identity the exponent set must satisfy, as relative defects.
template <class Real>
std::vector<IdentityCheck> identity_checks(const ExponentSetT<Real>& e, const Real& p,
                                           double tol = 1e-12) {
  const Real one(1), two(2), three(3), half = Real(3) / Real(2);
  std::vector<IdentityCheck> out;
  auto add = [&](std::string name, const Real& lhs, const Real& rhs) {
    const double l = as_double(lhs);
    const double r = as_double(rhs);
    const double scale = std::max({std::abs(l), std::abs(r), 1e-300});
    const double d = std::abs(as_double(Real(lhs - rhs))) / scale;
    out.push_back({std::move(name), d, d <= tol});
  };
  auto l2 = [&](std::string name, const Real& inv_q, const Real& r) {
    add(std::move(name), two * inv_q + three / r, half);
  };
  add("A+B=2p", e.A + e.B, two * p);
  add("A+2sigma_c=B*sigma_c", e.A + two * e.sigma_c, e.B * e.sigma_c);
  add("sigma_c=(1-s_c)/s_c", e.sigma_c * e.s_c, one - e.s_c);
  add("2/a_bar+3/r_bar=3/2-s_c", two / e.a_bar + three / e.r_bar, half - e.s_c);
  add("s_c=3/p_tilde-3/r_bar", e.s_c, three / e.p_tilde - three / e.r_bar);
  l2("L2(a_bar,p_tilde)", one / e.a_bar, e.p_tilde);
  l2("L2(q,r)", one / e.q, e.r);
  l2("L2(m,s)", one / e.m, e.s);
  l2("L2(4+,3-)", one / e.q4_plus, e.r3_minus);
  l2("L2(k,l)", e.distant.inv_k, e.distant.l);
  add("1/a_bar=(1-s_c)/q+s_c/m", one / e.a_bar, (one - e.s_c) / e.q + e.s_c / e.m);
  add("1/r_bar=(1-s_c)/r+s_c/n", one / e.r_bar, (one - e.s_c) / e.r + e.s_c / e.n);
  add("n=3s/(3-s)", e.n, three * e.s / (three - e.s));
  add("1/r_bar=theta/l", one / e.r_bar, e.distant.theta / e.distant.l);
  add("1/a_bar=theta/k+(1-theta)/p_bar", one / e.a_bar,
      e.distant.theta * e.distant.inv_k + (one - e.distant.theta) / e.distant.p_bar);
  return out;
}

}  // namespace hlab
