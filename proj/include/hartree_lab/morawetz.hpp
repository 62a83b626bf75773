#pragma once

// Post-processing of trajectories: localized coercivity, Morawetz time averages,
// energy evacuation, the localized-mass scattering monitor, and the finite
// difference audit of the z / z' / z'' chain.

#include "hartree_lab/evolve.hpp"
#include "hartree_lab/exponents.hpp"
#include "hartree_lab/groundstate.hpp"
#include "hartree_lab/riesz.hpp"
#include "hartree_lab/trajectory.hpp"
#include "hartree_lab/virial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace hlab {

/// eta(r/R): the same cos^2 ramp as chi, 1 on B(0,R/2) and 0 outside B(0,R).
inline double eta_cutoff(double r, double R) { return chi_cutoff(r, R); }

inline RadialField localize(const RadialField& u, double R) {
  if (!std::isfinite(R)) return u;
  return u.multiplied_by([R](double r) { return chi_cutoff(r, R); });
}

struct CoercivityReport {
  bool hypothesis = false;  // P(u) M(u)^sigma_c < P(Q) M(Q)^sigma_c
  std::string error;
  double ratio = 0.0;       // P(u) M(u)^sigma_c / (P(Q) M(Q)^sigma_c)
  double delta = 0.0;
  double delta_prime = 0.0;
  double lhs = 0.0;         // ||grad(chi u)||^2 - (B/2p) P(chi u)
  double rhs = 0.0;         // delta' P(chi u)
  double margin = 0.0;      // lhs - rhs
  bool pass = false;
};

/// Checks ||grad(chi_R u)||^2 - (B/2p) P(chi_R u) >= delta' P(chi_R u) with delta
/// read off the threshold ratio. R = inf skips the cutoff. For u = cQ without a
/// cutoff the two sides coincide exactly, so `rel_tol` absorbs round-off there.
inline CoercivityReport coercivity_check(const RadialField& u, const GroundStateResult& gs, const ExponentSet& e,
                                         double R, const RieszKernel& kern, double rel_tol = 1e-8) {
  CoercivityReport c;
  const double p = gs.p;
  const double P = potential_energy(kern, u, p);
  c.ratio = P * std::pow(l2_norm_sq(u), e.sigma_c) / gs.thresholds.PQ_MQ_sigma;
  if (!(c.ratio < 1.0)) {
    c.error = "hypothesis not satisfied: P(u)M(u)^sigma_c >= P(Q)M(Q)^sigma_c";
    return c;
  }
  c.hypothesis = true;
  c.delta = 1.0 - c.ratio;
  c.delta_prime = e.B / (2.0 * p) * (std::pow(1.0 - c.delta, -(e.B - 2.0) / e.B) - 1.0);
  const auto v = localize(u, R);
  const double Pv = potential_energy(kern, v, p);
  const double Gv = grad_norm_sq(v, DifferenceScheme::spectral);
  c.lhs = Gv - e.B / (2.0 * p) * Pv;
  c.rhs = c.delta_prime * Pv;
  c.margin = c.lhs - c.rhs;
  c.pass = c.margin >= -rel_tol * std::max({std::abs(c.lhs), std::abs(c.rhs), Gv});
  return c;
}

/// P(chi_R u) at every stored snapshot.
inline std::vector<double> localized_potential(const Trajectory& traj, double R, const RieszKernel& kern, double p) {
  if (traj.fields.size() != traj.times.size()) {
    throw std::invalid_argument("morawetz: trajectory has no field snapshots");
  }
  std::vector<double> out;
  out.reserve(traj.fields.size());
  for (const auto& u : traj.fields) out.push_back(potential_energy(kern, localize(u, R), p));
  return out;
}

struct MorawetzAverage {
  double R = 0.0;
  double T = 0.0;
  double average = 0.0;     // (1/T) int_0^T P(chi_R u) dt, trapezoid over samples
  double bound_R_over_T = 0.0;
  double bound_R_power = 0.0;  // R^{-2B/3}
  double ratio = 0.0;          // average / (R/T + R^{-2B/3})
  std::vector<double> evacuation_times;  // first times P(chi_R u) drops below P0 / 2^k
};

inline MorawetzAverage morawetz_average(const Trajectory& traj, const GroundStateResult& gs, const ExponentSet& e,
                                        double R, double T, const RieszKernel& kern) {
  if (!(T > 0.0)) throw std::invalid_argument("morawetz_average: T > 0 required");
  if (traj.times.empty() || traj.times.back() < T * (1.0 - 1e-12)) {
    throw std::invalid_argument("morawetz_average: trajectory does not reach T");
  }
  const auto P = localized_potential(traj, R, kern, gs.p);
  MorawetzAverage m;
  m.R = R;
  m.T = T;
  const auto& t = traj.times;
  for (std::size_t k = 1; k < t.size() && t[k - 1] < T; ++k) {
    const double hi = std::min(t[k], T);
    const double frac = (hi - t[k - 1]) / (t[k] - t[k - 1]);
    const double p_hi = P[k - 1] + frac * (P[k] - P[k - 1]);
    m.average += 0.5 * (P[k - 1] + p_hi) * (hi - t[k - 1]);
  }
  m.average /= T;
  m.bound_R_over_T = R / T;
  m.bound_R_power = std::pow(R, -2.0 * e.B / 3.0);
  m.ratio = m.average / (m.bound_R_over_T + m.bound_R_power);
  if (!P.empty() && P[0] > 0.0) {
    double level = 0.5 * P[0];
    for (std::size_t k = 0; k < P.size() && t[k] <= T; ++k) {
      while (P[k] < level && level > 1e-300) {
        m.evacuation_times.push_back(t[k]);
        level *= 0.5;
      }
    }
  }
  return m;
}

struct ScatteringMonitor {
  double R = 0.0;
  double eps = 0.0;
  double initial = 0.0;
  double final_value = 0.0;
  double minimum = 0.0;
  double t_min = 0.0;
  bool criterion_met = false;  // min localized mass <= eps^2
  double max_rate = 0.0;       // max |d/dt mass_in_ball|, central differences
  double rate_constant = 0.0;  // R * max_rate
  double h1_sup = 0.0;         // sup_t ||u||_{H^1}^2
  bool rate_bounded = false;   // rate_constant <= 10 h1_sup
};

inline ScatteringMonitor scattering_monitor(const Trajectory& traj, double R, double eps) {
  const auto& d = traj.diagnostics;
  const auto it = d.mass_in_ball.find(R);
  if (it == d.mass_in_ball.end()) {
    throw std::invalid_argument("scattering_monitor: no localized-mass series for R = " + std::to_string(R));
  }
  const auto& m = it->second;
  ScatteringMonitor s;
  s.R = R;
  s.eps = eps;
  s.initial = m.front();
  s.final_value = m.back();
  const auto lo = std::min_element(m.begin(), m.end());
  s.minimum = *lo;
  s.t_min = d.t[static_cast<std::size_t>(lo - m.begin())];
  s.criterion_met = s.minimum <= eps * eps;
  for (std::size_t k = 0; k < m.size(); ++k) {
    s.h1_sup = std::max(s.h1_sup, d.M[k] + d.grad_sq[k]);
    if (k > 0 && k + 1 < m.size()) {
      s.max_rate = std::max(s.max_rate, std::abs((m[k + 1] - m[k - 1]) / (d.t[k + 1] - d.t[k - 1])));
    }
  }
  s.rate_constant = R * s.max_rate;
  s.rate_bounded = s.rate_constant <= 10.0 * s.h1_sup;
  return s;
}

struct ChainDefects {
  double z = 0.0;   // max |dz/dt - z'| over interior samples
  double zp = 0.0;  // max |dz'/dt - z''|
  std::size_t samples = 0;
};

/// Central differences of z and z' against z' and z''. Needs uniform sampling.
inline ChainDefects identity_chain(const DiagnosticsSeries& d) {
  ChainDefects c;
  for (std::size_t k = 1; k + 1 < d.size(); ++k) {
    const double h = d.t[k + 1] - d.t[k - 1];
    c.z = std::max(c.z, std::abs((d.z[k + 1] - d.z[k - 1]) / h - d.zp[k]));
    c.zp = std::max(c.zp, std::abs((d.zp[k + 1] - d.zp[k - 1]) / h - d.zpp[k]));
    ++c.samples;
  }
  return c;
}

/// Pointwise sign of the potential term: -2 a' V' >= 0 wherever |u| may live.
inline bool potential_term_nonnegative(const PotentialSpec& V, const MorawetzWeight& w, const RadialGrid& grid) {
  const auto dV = V.sample_derivative(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (-2.0 * w.da()[i] * dV[i] < 0.0) return false;
  }
  return true;
}

}  // namespace hlab
