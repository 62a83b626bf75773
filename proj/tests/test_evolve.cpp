#include "hartree_lab/evolve.hpp"
#include "hartree_lab/groundstate.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <limits>

namespace hlab {
namespace {

const ModelParams cubic{3.0, 2.0, 1e-3};

GridPtr shared_grid() {
  static GridPtr g = RadialGrid::make();
  return g;
}

const RieszKernel& newton() {
  static RieszKernel k(2.0, shared_grid());
  return k;
}

const GroundStateResult& cubic_ground_state() {
  static GroundStateResult gs = solve_ground_state(cubic, newton());
  return gs;
}

double sup_distance(const RadialField& a, const RadialField& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

TEST(Evolve, FreeGaussianMatchesClosedForm) {
  // i u_t + Lap u = 0, u0 = exp(-r^2): u = (1 + 4it)^{-3/2} exp(-r^2 / (1 + 4it)).
  auto grid = shared_grid();
  const auto u0 = RadialField::from_function(grid, [](double r) { return std::exp(-r * r); });
  EvolveConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_end = 1.0;
  cfg.linear = true;
  cfg.keep_fields = true;
  cfg.sample_every = 100;
  const auto traj = evolve(u0, PotentialSpec::zero(), newton(), cubic, cfg);
  const double t = traj.times.back();
  ASSERT_DOUBLE_EQ(t, 1.0);
  const complex s = 1.0 + complex(0.0, 4.0 * t);
  auto diff = traj.fields.back();
  for (std::size_t i = 0; i < diff.size(); ++i) {
    const double r = grid->node(i);
    diff[i] -= std::pow(s, -1.5) * std::exp(-r * r / s);
  }
  EXPECT_LE(std::sqrt(l2_norm_sq(diff)), 1e-6);
  EXPECT_LE(conservation_report(traj).mass_drift, 1e-12);
}

TEST(Evolve, OneStepKeepsMass) {
  const auto& gs = cubic_ground_state();
  const auto V = PotentialSpec::gaussian(0.5, 2.0);
  const RadialField u0 = 0.8 * gs.Q;
  for (auto scheme : {Splitting::strang, Splitting::strang_phase_outer, Splitting::lie}) {
    const auto u1 = step(u0, V, newton(), cubic, 1e-3, scheme);
    EXPECT_NEAR(l2_norm_sq(u1) / l2_norm_sq(u0), 1.0, 1e-12) << to_string(scheme);
  }
}

TEST(Evolve, TimeReversal) {
  const auto& gs = cubic_ground_state();
  const auto V = PotentialSpec::gaussian(0.5, 2.0);
  const RadialField u0 = 0.8 * gs.Q;
  for (auto scheme : {Splitting::strang, Splitting::strang_phase_outer}) {
    Stepper s(V, newton(), cubic, scheme);
    RadialField u = u0;
    s.advance(u, 1e-3, 20);
    s.advance(u, -1e-3, 20);
    EXPECT_LE(sup_distance(u, u0), 1e-10) << to_string(scheme);
  }
}

TEST(Evolve, GaugeCovariance) {
  const auto& gs = cubic_ground_state();
  const auto V = PotentialSpec::gaussian(0.5, 2.0);
  const complex phase = std::polar(1.0, 0.7);
  EvolveConfig cfg;
  cfg.t_end = 0.2;
  cfg.keep_fields = true;
  const auto a = evolve(0.8 * gs.Q, V, newton(), cubic, cfg);
  const auto b = evolve(phase * (0.8 * gs.Q), V, newton(), cubic, cfg);
  EXPECT_LE(sup_distance(phase * a.fields.back(), b.fields.back()), 1e-13);
  for (std::size_t k = 0; k < a.diagnostics.size(); ++k) {
    EXPECT_NEAR(a.diagnostics.E[k], b.diagnostics.E[k], 1e-12 * std::abs(a.diagnostics.E[k]));
    EXPECT_NEAR(a.diagnostics.zp[k], b.diagnostics.zp[k], 1e-11);
  }
}

TEST(Evolve, ZeroDurationGivesOneSample) {
  const auto& gs = cubic_ground_state();
  EvolveConfig cfg;
  cfg.t_end = 0.0;
  const auto traj = evolve(gs.Q, PotentialSpec::zero(), newton(), cubic, cfg);
  ASSERT_EQ(traj.times.size(), 1u);
  EXPECT_EQ(traj.times[0], 0.0);
  EXPECT_EQ(traj.diagnostics.size(), 1u);
  EXPECT_EQ(traj.steps, 0u);
}

TEST(Evolve, SampleTimesIncreaseFromZero) {
  const auto& gs = cubic_ground_state();
  EvolveConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 0.0255;  // not a multiple of the cadence: the last sample is at the final step
  cfg.sample_every = 10;
  const auto traj = evolve(0.5 * gs.Q, PotentialSpec::zero(), newton(), cubic, cfg);
  ASSERT_EQ(traj.times.size(), 4u);
  EXPECT_EQ(traj.times[0], 0.0);
  for (std::size_t k = 1; k < traj.times.size(); ++k) EXPECT_GT(traj.times[k], traj.times[k - 1]);
  EXPECT_NEAR(traj.times.back(), 0.026, 1e-15);
}

TEST(Evolve, EnergyDriftIsSecondOrder) {
  const auto& gs = cubic_ground_state();
  const auto V = PotentialSpec::gaussian(0.5, 2.0);
  std::vector<double> drift;
  for (double dt : {4e-3, 2e-3}) {
    EvolveConfig cfg;
    cfg.dt = dt;
    cfg.t_end = 1.0;
    cfg.sample_every = static_cast<std::size_t>(std::lround(0.04 / dt));
    const auto rep = conservation_report(evolve(0.8 * gs.Q, V, newton(), cubic, cfg));
    EXPECT_LE(rep.mass_drift, 1e-12);
    drift.push_back(rep.energy_drift);
  }
  const double ratio = drift[0] / drift[1];
  EXPECT_GE(ratio, 3.5);
  EXPECT_LE(ratio, 4.5);
}

TEST(Evolve, LieSplittingIsFirstOrder) {
  const auto& gs = cubic_ground_state();
  std::vector<double> drift;
  for (double dt : {4e-3, 2e-3}) {
    EvolveConfig cfg;
    cfg.dt = dt;
    cfg.t_end = 0.5;
    cfg.scheme = Splitting::lie;
    cfg.sample_every = static_cast<std::size_t>(std::lround(0.02 / dt));
    drift.push_back(conservation_report(evolve(0.8 * gs.Q, PotentialSpec::zero(), newton(), cubic, cfg)).energy_drift);
  }
  EXPECT_NEAR(drift[0] / drift[1], 2.0, 0.3);
}

TEST(Evolve, SolitonModulusErrorIsSecondOrderAtShortTimes) {
  // e^{it}Q is an exact solution; the split-step error in |u| is O(dt^2).
  const auto& gs = cubic_ground_state();
  std::vector<double> drift;
  for (double dt : {2e-3, 1e-3}) {
    EvolveConfig cfg;
    cfg.dt = dt;
    cfg.t_end = 0.25;
    cfg.sample_every = static_cast<std::size_t>(std::lround(0.25 / dt));
    cfg.keep_fields = true;
    const auto traj = evolve(gs.Q, PotentialSpec::zero(), newton(), cubic, cfg);
    double d = 0.0;
    for (std::size_t i = 0; i < gs.Q.size(); ++i) {
      d = std::max(d, std::abs(std::abs(traj.fields.back()[i]) - gs.Q[i].real()));
    }
    drift.push_back(d);
  }
  EXPECT_NEAR(drift[0] / drift[1], 4.0, 0.4);
  EXPECT_LE(drift[1], 1e-4);
}

TEST(Evolve, SolitonPerturbationGrowsAtTheLinearisedRate) {
  // The intercritical ground state is linearly unstable. An independent dense
  // eigen-solve of the linearised operator at (p, gamma) = (3, 2) gives a real
  // eigenvalue close to 5.05, so the O(dt^2) splitting seed must grow like e^{5.05 t}.
  const auto& gs = cubic_ground_state();
  EvolveConfig cfg;
  cfg.dt = 2e-3;
  cfg.t_end = 1.5;
  cfg.sample_every = 125;
  cfg.keep_fields = true;
  const auto traj = evolve(gs.Q, PotentialSpec::zero(), newton(), cubic, cfg);
  auto drift = [&](std::size_t k) {
    double d = 0.0;
    for (std::size_t i = 0; i < gs.Q.size(); ++i) {
      d = std::max(d, std::abs(std::abs(traj.fields[k][i]) - gs.Q[i].real()));
    }
    return d;
  };
  const double rate = std::log(drift(6) / drift(4)) / (traj.times[6] - traj.times[4]);
  EXPECT_NEAR(rate, 5.05, 0.4);
}

TEST(Evolve, SpongeBudgetAndH1Bound) {
  const auto& gs = cubic_ground_state();
  EvolveConfig cfg;
  cfg.dt = 2e-3;
  cfg.t_end = 4.0;
  cfg.sample_every = 100;
  cfg.sponge.enabled = true;
  cfg.sponge.start = 20.0;
  const RadialField u0 = 0.8 * gs.Q;
  const auto traj = evolve(u0, PotentialSpec::zero(), newton(), cubic, cfg);
  const auto rep = conservation_report(traj);
  EXPECT_LE(rep.budget_drift, 1e-10);
  EXPECT_GT(traj.diagnostics.exported_mass.back(), 0.0);
  const double h1_0 = std::sqrt(h1_norm_sq(u0));
  for (std::size_t k = 0; k < traj.diagnostics.size(); ++k) {
    EXPECT_LT(std::sqrt(traj.diagnostics.M[k] + traj.diagnostics.grad_sq[k]), 2.0 * h1_0);
  }
}

TEST(Evolve, RejectsInvalidConfigAndNonFiniteData) {
  const auto& gs = cubic_ground_state();
  EvolveConfig cfg;
  cfg.dt = 0.0;
  EXPECT_THROW(evolve(gs.Q, PotentialSpec::zero(), newton(), cubic, cfg), std::invalid_argument);
  cfg = {};
  cfg.t_end = -1.0;
  EXPECT_THROW(evolve(gs.Q, PotentialSpec::zero(), newton(), cubic, cfg), std::invalid_argument);
  cfg = {};
  cfg.sponge.enabled = true;
  cfg.sponge.start = 50.0;
  EXPECT_THROW(evolve(gs.Q, PotentialSpec::zero(), newton(), cubic, cfg), std::invalid_argument);
  cfg = {};
  cfg.t_end = 0.01;
  cfg.sample_every = 5;
  RadialField bad = gs.Q;
  bad[100] = std::numeric_limits<double>::quiet_NaN();
  try {
    (void)evolve(bad, PotentialSpec::zero(), newton(), cubic, cfg);
    FAIL() << "expected EvolveError";
  } catch (const EvolveError& e) {
    EXPECT_NEAR(e.time(), 0.005, 1e-12);
  }
}

TEST(Evolve, WarnsWhenWavesReachAnUndampedBoundary) {
  auto grid = RadialGrid::make(10.0, 256);
  RieszKernel k(2.0, grid);
  // fast outgoing wave packet
  const auto u0 = RadialField::from_function(grid, [](double r) {
    return std::exp(-(r - 3.0) * (r - 3.0)) * std::polar(1.0, 6.0 * r);
  });
  EvolveConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 1.0;
  cfg.sample_every = 50;
  cfg.linear = true;
  cfg.ball_radii = {5.0};
  const auto traj = evolve(u0, PotentialSpec::zero(), k, cubic, cfg);
  EXPECT_FALSE(traj.warnings.empty());
}

}  // namespace
}  // namespace hlab
