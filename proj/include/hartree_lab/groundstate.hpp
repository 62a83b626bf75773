#pragma once

// Ground state of -Q + Laplacian Q + (I_gamma * Q^p) Q^{p-1} = 0 by Petviashvili
// iteration, plus the quantities built from it: Pohozaev defects, the sharp
// Gagliardo-Nirenberg constant and the threshold functions g and f.

#include "hartree_lab/exponents.hpp"
#include "hartree_lab/grid.hpp"
#include "hartree_lab/riesz.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace hlab {

class GroundStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SeedProfile { gaussian, sech, wide_gaussian };

inline const char* to_string(SeedProfile s) {
  switch (s) {
    case SeedProfile::gaussian: return "gaussian";
    case SeedProfile::sech: return "sech";
    case SeedProfile::wide_gaussian: return "wide_gaussian";
  }
  return "?";
}

inline double seed_value(SeedProfile s, double r) {
  switch (s) {
    case SeedProfile::gaussian: return std::exp(-r * r);
    case SeedProfile::sech: return 1.0 / std::cosh(r);
    case SeedProfile::wide_gaussian: return 2.0 * std::exp(-r * r / 9.0);
  }
  return 0.0;
}

struct GroundStateOptions {
  double tol = 1e-9;  // sup-norm residual relative to ||Q||_inf
  std::size_t max_iter = 400;
  // More than one seed turns on the uniqueness scan: every seed is iterated and
  // the results are compared.
  std::vector<SeedProfile> seeds{SeedProfile::gaussian};
};

struct Thresholds {
  double PQ_MQ_sigma = 0.0;         // P(Q) M(Q)^sigma_c
  double ME_threshold = 0.0;        // M(Q)^sigma_c E0(Q)
  double grad_mass_threshold = 0.0; // ||Q||_2^sigma_c ||grad Q||_2
};

struct SeedCandidate {
  SeedProfile seed;
  bool converged = false;
  double residual = 0.0;
  std::size_t iterations = 0;
  double scaled_energy = 0.0;  // M^sigma_c E0, invariant under the scaling symmetry
  double distance = 0.0;       // sup |Q_seed - Q_selected| / ||Q_selected||_inf
};

struct GroundStateResult {
  RadialField Q;
  double p = 0.0;
  double gamma = 0.0;
  double residual = 0.0;
  std::size_t iterations = 0;
  double mass = 0.0;
  double grad_norm_sq = 0.0;
  double P = 0.0;
  double E0 = 0.0;
  double C_op = 0.0;
  Thresholds thresholds;
  bool positive = false;
  bool monotone = false;
  std::vector<SeedCandidate> candidates;
  bool ambiguous = false;  // distinct fixed points from different seeds
};

namespace detail {

struct PetviashviliRun {
  std::vector<double> Q;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// N(Q) = (I_gamma * |Q|^p) |Q|^{p-2} Q.
inline std::vector<double> hartree_term(const RieszKernel& kern, const std::vector<double>& Q, double p) {
  std::vector<double> g(Q.size());
  for (std::size_t i = 0; i < Q.size(); ++i) g[i] = std::pow(std::abs(Q[i]), p);
  auto h = kern.convolve(g);
  for (std::size_t i = 0; i < Q.size(); ++i) {
    const double a = std::abs(Q[i]);
    h[i] *= a > 0.0 ? std::pow(a, p - 2.0) * Q[i] : 0.0;
  }
  return h;
}

inline std::vector<complex> to_complex(const std::vector<double>& x) { return {x.begin(), x.end()}; }

// sup |-Q + Lap Q + N(Q)| / sup |Q|, Laplacian in the sine basis.
inline double elliptic_residual(const RieszKernel& kern, const std::vector<double>& Q, double p) {
  const auto& sp = kern.grid().spectral();
  const auto lap = sp.laplacian(to_complex(Q));
  const auto N = hartree_term(kern, Q, p);
  double res = 0.0;
  double top = 0.0;
  for (std::size_t i = 0; i < Q.size(); ++i) {
    res = std::max(res, std::abs(-Q[i] + lap[i].real() + N[i]));
    top = std::max(top, std::abs(Q[i]));
  }
  return top > 0.0 ? res / top : std::numeric_limits<double>::infinity();
}

inline PetviashviliRun petviashvili(const RieszKernel& kern, double p, SeedProfile seed,
                                    const GroundStateOptions& opt) {
  const auto& grid = kern.grid();
  const auto& sp = grid.spectral();
  const auto lam = sp.eigenvalues();
  const std::size_t n = grid.size();
  const double alpha = (2.0 * p - 1.0) / (2.0 * p - 2.0);

  PetviashviliRun run;
  run.Q.resize(n);
  for (std::size_t i = 0; i < n; ++i) run.Q[i] = seed_value(seed, grid.node(i));

  for (std::size_t it = 0; it < opt.max_iter; ++it) {
    const auto N = hartree_term(kern, run.Q, p);
    const auto cq = sp.forward(to_complex(run.Q));
    auto cn = sp.forward(to_complex(N));
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      num += (1.0 + lam[k]) * std::norm(cq[k]);
      den += cq[k].real() * cn[k].real();
    }
    if (!(den > 0.0) || !std::isfinite(num / den)) {
      throw GroundStateError("ground state: iteration collapsed (stabilising factor diverged)");
    }
    const double factor = std::pow(num / den, alpha);
    for (std::size_t k = 0; k < n; ++k) cn[k] *= factor / (1.0 + lam[k]);
    const auto next = sp.backward(std::move(cn));
    double top = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      run.Q[i] = next[i].real();
      top = std::max(top, std::abs(run.Q[i]));
    }
    if (!(top > 1e-300) || !std::isfinite(top)) {
      throw GroundStateError("ground state: iteration collapsed to zero");
    }
    run.iterations = it + 1;
    // The residual costs one more convolution, so only look once the
    // stabilising factor has settled.
    if (std::abs(num / den - 1.0) < 1e-8 || it + 1 == opt.max_iter) {
      run.residual = elliptic_residual(kern, run.Q, p);
      if (run.residual <= opt.tol) {
        run.converged = true;
        break;
      }
    }
  }
  return run;
}

}  // namespace detail

inline Thresholds thresholds_from(double mass, double grad_sq, double P, double E0, double sigma_c) {
  Thresholds t;
  t.PQ_MQ_sigma = P * std::pow(mass, sigma_c);
  t.ME_threshold = std::pow(mass, sigma_c) * E0;
  t.grad_mass_threshold = std::pow(mass, 0.5 * sigma_c) * std::sqrt(grad_sq);
  return t;
}

inline GroundStateResult solve_ground_state(const ModelParams& params, const RieszKernel& kern,
                                            const GroundStateOptions& opt = {}) {
  params.validate();
  if (!params.intercritical()) throw ExponentError("ground state: parameters are not intercritical");
  if (!(opt.tol > 0.0)) throw std::invalid_argument("ground state: tol must be positive");
  if (opt.seeds.empty()) throw std::invalid_argument("ground state: at least one seed required");
  if (std::abs(kern.gamma() - params.gamma) > 1e-15) {
    throw std::invalid_argument("ground state: kernel gamma differs from the model gamma");
  }
  const double p = params.p;
  const auto ab = ab_exponents(p, params.gamma);
  const auto grid = kern.grid_ptr();

  struct Solved {
    detail::PetviashviliRun run;
    RadialField Q;
    double mass, grad, P, E0;
  };
  std::vector<Solved> solved;
  std::vector<SeedCandidate> cands;
  std::string last_failure;
  for (auto seed : opt.seeds) {
    SeedCandidate c{seed};
    try {
      auto run = detail::petviashvili(kern, p, seed, opt);
      c.converged = run.converged;
      c.residual = run.residual;
      c.iterations = run.iterations;
      if (!run.converged) {
        last_failure = std::string("ground state: no convergence from seed ") + to_string(seed) +
                       " after " + std::to_string(run.iterations) + " iterations, residual " +
                       std::to_string(run.residual);
      } else {
        auto Q = RadialField::from_real(grid, run.Q);
        const double mass = l2_norm_sq(Q);
        const double grad = grad_norm_sq(Q, DifferenceScheme::spectral);
        const double P = potential_energy(kern, Q, p);
        const double E0 = 0.5 * grad - P / (2.0 * p);
        c.scaled_energy = std::pow(mass, ab.sigma_c) * E0;
        solved.push_back({std::move(run), std::move(Q), mass, grad, P, E0});
      }
    } catch (const GroundStateError& e) {
      last_failure = e.what();
    }
    cands.push_back(c);
  }
  if (solved.empty()) throw GroundStateError(last_failure);

  // Lowest M^sigma E0 wins; ties keep the first seed.
  std::size_t best = 0;
  for (std::size_t k = 1; k < solved.size(); ++k) {
    const double a = std::pow(solved[k].mass, ab.sigma_c) * solved[k].E0;
    const double b = std::pow(solved[best].mass, ab.sigma_c) * solved[best].E0;
    if (a < b * (1.0 - 1e-9)) best = k;
  }
  auto& s = solved[best];

  GroundStateResult out;
  out.p = p;
  out.gamma = params.gamma;
  out.residual = s.run.residual;
  out.iterations = s.run.iterations;
  out.mass = s.mass;
  out.grad_norm_sq = s.grad;
  out.P = s.P;
  out.E0 = s.E0;
  out.C_op = s.P / (std::pow(s.mass, 0.5 * ab.A) * std::pow(s.grad, 0.5 * ab.B));
  out.thresholds = thresholds_from(s.mass, s.grad, s.P, s.E0, ab.sigma_c);

  const auto& Q = s.run.Q;
  const double top = *std::max_element(Q.begin(), Q.end());
  // Far-field values sit at round-off level, so the shape checks allow that much.
  const double slack = 1e-12 * top;
  out.positive = std::all_of(Q.begin(), Q.end(), [&](double q) { return q > -slack; }) && Q[0] > 0.0;
  out.monotone = true;
  for (std::size_t i = 1; i < Q.size(); ++i) out.monotone = out.monotone && Q[i] <= Q[i - 1] + slack;

  std::size_t k = 0;
  for (auto& c : cands) {
    if (!c.converged) continue;
    double d = 0.0;
    for (std::size_t i = 0; i < Q.size(); ++i) d = std::max(d, std::abs(solved[k].run.Q[i] - Q[i]));
    c.distance = d / top;
    out.ambiguous = out.ambiguous || c.distance > 1e-6;
    ++k;
  }
  out.candidates = std::move(cands);
  out.Q = std::move(s.Q);
  return out;
}

struct PohozaevReport {
  double energy_vs_grad = 0.0;  // relative defect of E0 = (B-2)/(2B) ||grad Q||^2
  double energy_vs_mass = 0.0;  // relative defect of E0 = (B-2)/(2A) ||Q||^2
  double potential = 0.0;       // relative defect of P = (2p/B) ||grad Q||^2
  bool pass = false;
};

inline PohozaevReport pohozaev_check(const GroundStateResult& gs, const ExponentSet& e, double tol = 1e-6) {
  auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
  PohozaevReport r;
  r.energy_vs_grad = rel(gs.E0, (e.B - 2.0) / (2.0 * e.B) * gs.grad_norm_sq);
  r.energy_vs_mass = rel(gs.E0, (e.B - 2.0) / (2.0 * e.A) * gs.mass);
  r.potential = rel(gs.P, 2.0 * gs.p / e.B * gs.grad_norm_sq);
  r.pass = r.energy_vs_grad <= tol && r.energy_vs_mass <= tol && r.potential <= tol;
  return r;
}

struct SharpConstant {
  double direct = 0.0;     // P / (||Q||^A ||grad Q||^B)
  double pohozaev = 0.0;   // (2p/B)^{B/2} / (M^sigma P)^{B/2-1}
  double value = 0.0;      // mean
  double disagreement = 0.0;
};

inline SharpConstant sharp_constant(const GroundStateResult& gs, const ExponentSet& e) {
  SharpConstant c;
  c.direct = gs.P / (std::pow(gs.mass, 0.5 * e.A) * std::pow(gs.grad_norm_sq, 0.5 * e.B));
  c.pohozaev = std::pow(2.0 * gs.p / e.B, 0.5 * e.B) /
               std::pow(std::pow(gs.mass, e.sigma_c) * gs.P, 0.5 * e.B - 1.0);
  c.value = 0.5 * (c.direct + c.pohozaev);
  c.disagreement = std::abs(c.direct - c.pohozaev) / c.value;
  if (c.disagreement > 1e-4) {
    throw GroundStateError("sharp constant: the two formulas disagree by " + std::to_string(c.disagreement) +
                           " (ground state not converged?)");
  }
  return c;
}

/// P(u) / (C_op ||u||^A ||grad u||^B); at most 1 by Gagliardo-Nirenberg.
inline double gn_ratio(const RadialField& u, const RieszKernel& kern, double p, const ExponentSet& e, double C_op) {
  const double P = potential_energy(kern, u, p);
  const double M = l2_norm_sq(u);
  const double G = grad_norm_sq(u, DifferenceScheme::spectral);
  return P / (C_op * std::pow(M, 0.5 * e.A) * std::pow(G, 0.5 * e.B));
}

struct ThresholdFunctions {
  double x0 = 0.0;
  double g_x0 = 0.0;
  double g_defect = 0.0;        // |g(x0) - M^sigma E0| / |M^sigma E0|
  double g_prime_x0 = 0.0;      // finite difference
  double g_second_x0 = 0.0;
  bool g_critical = false;      // |g'(x0)| <= 1e-6 |g''(x0)| x0
  double f_at_one = 0.0;
  bool f_increasing = false;    // f' > 0 sampled on (0,1)
  bool pass = false;
};

inline ThresholdFunctions threshold_functions(const GroundStateResult& gs, const ExponentSet& e,
                                              double tol = 1e-6) {
  const double C = gs.C_op;
  const double p = gs.p;
  const double B = e.B;
  auto g = [&](double x) { return 0.5 * x * x - C / (2.0 * p) * std::pow(x, B); };
  auto f = [&](double y) { return B / (B - 2.0) * y * y - 2.0 / (B - 2.0) * std::pow(y, B); };

  ThresholdFunctions t;
  t.x0 = gs.thresholds.grad_mass_threshold;
  t.g_x0 = g(t.x0);
  t.g_defect = std::abs(t.g_x0 - gs.thresholds.ME_threshold) / std::abs(gs.thresholds.ME_threshold);
  const double h = 1e-5 * t.x0;
  t.g_prime_x0 = (g(t.x0 + h) - g(t.x0 - h)) / (2.0 * h);
  t.g_second_x0 = 1.0 - C * B * (B - 1.0) / (2.0 * p) * std::pow(t.x0, B - 2.0);
  t.g_critical = std::abs(t.g_prime_x0) <= 1e-6 * std::abs(t.g_second_x0) * t.x0;
  t.f_at_one = f(1.0);
  t.f_increasing = true;
  double prev = f(0.0);
  for (int k = 1; k < 1000; ++k) {
    const double y = k / 1000.0;
    const double fy = f(y);
    t.f_increasing = t.f_increasing && fy > prev;
    prev = fy;
  }
  t.pass = t.g_defect <= tol && t.g_critical && std::abs(t.f_at_one - 1.0) <= 1e-15 && t.f_increasing;
  return t;
}

/// chi(r/R): 1 for r <= R/2, cos^2 ramp to 0 at r = R.
inline double chi_cutoff(double r, double R) {
  const double x = r / R;
  if (x <= 0.5) return 1.0;
  if (x >= 1.0) return 0.0;
  const double c = std::cos(std::numbers::pi * (x - 0.5));
  return c * c;
}

}  // namespace hlab
