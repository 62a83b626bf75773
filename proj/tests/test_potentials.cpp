#include "hartree_lab/potentials.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace hlab;

namespace {
const double pi = std::numbers::pi;
}

TEST(Potentials, ZeroPotential) {
  auto g = RadialGrid::make(40.0, 2048);
  const auto a = audit_hypotheses(PotentialSpec::zero(), *g);
  EXPECT_EQ(a.kato_norm, 0.0);
  EXPECT_EQ(a.kato_norm_negative_part, 0.0);
  EXPECT_EQ(a.l32_norm, 0.0);
  EXPECT_TRUE(a.theorem_hypotheses());
  for (const auto& [q, v] : a.x_grad_V_lr_norms) EXPECT_EQ(v, 0.0);
}

TEST(Potentials, UnitBallKatoNorm) {
  auto g = RadialGrid::make(40.0, 2048);
  const auto V = PotentialSpec::step(1.0, 1.0);
  const auto k = kato_norm(V, *g);
  EXPECT_NEAR(k.norm, 2 * pi, 1e-10);
  EXPECT_EQ(k.argmax_radius, 0.0);
  for (std::size_t i = 1; i < k.values.size(); ++i) EXPECT_LE(k.values[i], k.values[i - 1] + 1e-12);
  EXPECT_EQ(k.probes.size(), 64u);

  const auto two = audit_hypotheses(PotentialSpec::step(2.0, 1.0), *g);
  EXPECT_EQ(two.kato_norm_negative_part, 0.0);
  EXPECT_TRUE(two.kato_smallness);
  EXPECT_NEAR(two.kato_norm, 4 * pi, 1e-9);
}

TEST(Potentials, GaussianKatoClosedForm) {
  // int e^{-|y|^2} / |x - y| dy = pi^{3/2} erf(|x|) / |x|
  auto g = RadialGrid::make(40.0, 2048);
  const auto V = PotentialSpec::gaussian(1.0, 1.0);
  for (double x : {0.01, 0.3, 1.0, 2.5, 7.0}) {
    EXPECT_NEAR(kato_integral(V, x, g->r_max()), std::pow(pi, 1.5) * std::erf(x) / x, 1e-10);
  }
  EXPECT_NEAR(kato_integral(V, 0.0, g->r_max()), 2 * pi, 1e-10);
}

TEST(Potentials, KatoAgreesWithNewtonConvolutionOnGrid) {
  auto g = RadialGrid::make(40.0, 2048);
  RieszKernel newton(2.0, g);
  for (const auto& V : {PotentialSpec::gaussian(-0.7, 1.5), PotentialSpec::inverse_power(1.0, 4.0, 1.0),
                        PotentialSpec::gaussian(1.0, 0.8, 3.0)}) {
    std::vector<double> mag(g->size());
    for (std::size_t i = 0; i < g->size(); ++i) mag[i] = std::abs(V.value(g->node(i)));
    const auto h = newton.convolve(mag);
    for (std::size_t i : {0, 100, 500}) {
      // the grid integrates to r_max only
      const double tail = V.tail_exponent() > 2 && std::isfinite(V.tail_exponent())
                              ? 4 * pi * oracle::integrate([&](double s) { return s * std::abs(V.value(s)); }, g->r_max(), 1e4)
                              : 0.0;
      // a slowly decaying V is cut off at r_max on the grid, which costs ~dr * r_max |V(r_max)|
      EXPECT_NEAR(h[i] + tail, kato_integral(V, g->node(i), g->r_max()), 1e-5 * h[i]) << V.describe();
    }
  }
}

TEST(Potentials, RepulsiveGaussianPassesTheAudit) {
  auto g = RadialGrid::make(40.0, 2048);
  const auto a = audit_hypotheses(PotentialSpec::gaussian(1.0, 1.0), *g);
  EXPECT_TRUE(a.nonneg);
  EXPECT_TRUE(a.radial_derivative_sign);
  EXPECT_TRUE(a.theorem_hypotheses());
  EXPECT_EQ(a.kato_norm_negative_part, 0.0);
  EXPECT_LE(a.kato_norm_negative_part, a.kato_norm);
  // x.grad V = -2 r^2 e^{-r^2}
  const double sup = 2 * std::exp(-1.0);
  EXPECT_NEAR(a.x_grad_V_lr_norms.at(std::numeric_limits<double>::infinity()), sup, 1e-4);
}

TEST(Potentials, AttractiveGaussianFailsWithReasons) {
  auto g = RadialGrid::make(40.0, 2048);
  const auto a = audit_hypotheses(PotentialSpec::gaussian(-1.0, 1.0), *g);
  EXPECT_FALSE(a.nonneg);
  EXPECT_FALSE(a.theorem_hypotheses());
  EXPECT_NEAR(a.kato_norm_negative_part, a.kato_norm, 1e-12);
  // 4 pi int s e^{-s^2} ds = 2 pi < 4 pi, so the smallness condition itself holds.
  EXPECT_NEAR(a.kato_norm_negative_part, 2 * pi, 1e-9);
  EXPECT_TRUE(a.kato_smallness);
  EXPECT_NE(std::find(a.failures.begin(), a.failures.end(), "V >= 0 fails"), a.failures.end());

  const auto deep = audit_hypotheses(PotentialSpec::gaussian(-3.0, 1.0), *g);
  EXPECT_FALSE(deep.kato_smallness);
}

TEST(Potentials, ShippedCounterexamples) {
  auto g = RadialGrid::make(40.0, 2048);
  const auto shell = audit_hypotheses(PotentialSpec::gaussian(1.0, 1.0, 3.0), *g);
  EXPECT_TRUE(shell.nonneg);
  EXPECT_FALSE(shell.radial_derivative_sign);
  const auto slow = audit_hypotheses(PotentialSpec::inverse_power(1.0, 1.0, 1.0), *g);
  EXPECT_FALSE(slow.theorem_hypotheses());
  EXPECT_FALSE(slow.l32_finite);
  EXPECT_FALSE(slow.kato_finite);
  const auto fast = audit_hypotheses(PotentialSpec::inverse_power(1.0, 3.0, 1.0), *g);
  EXPECT_TRUE(fast.theorem_hypotheses()) << (fast.failures.empty() ? "" : fast.failures.front());
}

TEST(Potentials, ShippedCatalogue) {
  auto g = RadialGrid::make(40.0, 2048);
  for (const auto& [name, V, expected] : shipped_potentials()) {
    const auto a = audit_hypotheses(V, *g);
    EXPECT_EQ(a.theorem_hypotheses(), expected) << name;
    if (!expected) {
      EXPECT_FALSE(a.failures.empty()) << name;
    }
  }
}

TEST(Potentials, L32NormTwoWays) {
  auto g = RadialGrid::make(40.0, 2048);
  for (const auto& V : {PotentialSpec::gaussian(1.0, 1.0), PotentialSpec::gaussian(0.5, 2.0, 1.0),
                        PotentialSpec::inverse_power(2.0, 4.0, 0.7)}) {
    const auto a = audit_hypotheses(V, *g);
    EXPECT_NEAR(a.l32_norm, a.l32_norm_quadrature, 1e-6 * a.l32_norm) << V.describe();
  }
  // ||e^{-r^2}||_{3/2} = (4 pi int r^2 e^{-3r^2/2})^{2/3} = (pi/1.5)^{3/2 * 2/3}
  const auto a = audit_hypotheses(PotentialSpec::gaussian(1.0, 1.0), *g);
  EXPECT_NEAR(a.l32_norm, pi / 1.5, 1e-8);
}

TEST(Potentials, DerivativeMatchesFiniteDifference) {
  for (const auto& V : {PotentialSpec::gaussian(1.3, 0.9, 0.5), PotentialSpec::inverse_power(-2.0, 2.5, 0.4)}) {
    auto worst = [&](std::size_t n) {
      auto g = RadialGrid::make(20.0, n);
      double w = 0.0;
      for (std::size_t i = 1; i + 1 < g->size(); ++i) {
        const double fd = (V.value(g->node(i + 1)) - V.value(g->node(i - 1))) / (2 * g->dr());
        w = std::max(w, std::abs(fd - V.derivative(g->node(i))));
      }
      return w;
    };
    EXPECT_NEAR(worst(1000) / worst(2001), 4.0, 0.3) << V.describe();
  }
}

TEST(Potentials, TableInterpolation) {
  const auto V = PotentialSpec::table({0.0, 1.0, 3.0}, {2.0, 1.0, 0.0});
  EXPECT_DOUBLE_EQ(V.value(0.5), 1.5);
  EXPECT_DOUBLE_EQ(V.value(2.0), 0.5);
  EXPECT_DOUBLE_EQ(V.value(5.0), 0.0);
  EXPECT_DOUBLE_EQ(V.derivative(0.0), -1.0);
  EXPECT_DOUBLE_EQ(V.derivative(3.0), -0.5);
  EXPECT_DOUBLE_EQ(V.derivative(2.0), -0.5);
  auto g = RadialGrid::make(10.0, 500);
  EXPECT_TRUE(audit_hypotheses(V, *g).theorem_hypotheses());
  EXPECT_THROW(PotentialSpec::table({1.0, 0.5}, {0.0, 0.0}).validate(), std::invalid_argument);
}

TEST(Potentials, ParseCompactSpec) {
  const auto V = parse_potential("gaussian:amplitude=0.5,width=2");
  EXPECT_EQ(V.kind, PotentialKind::gaussian);
  EXPECT_EQ(V.amplitude, 0.5);
  EXPECT_EQ(V.width, 2.0);
  EXPECT_EQ(parse_potential(V.describe()).describe(), V.describe());
  EXPECT_EQ(parse_potential("zero").kind, PotentialKind::zero);
  EXPECT_THROW(parse_potential("gaussian:amplitud=1"), std::invalid_argument);
  EXPECT_THROW(parse_potential("cubic"), std::invalid_argument);
  EXPECT_THROW(parse_potential("gaussian:width=-1"), std::invalid_argument);
}

TEST(Potentials, EnergyAgainstQuadratureOracle) {
  auto g = RadialGrid::make(40.0, 2048);
  RieszKernel k(2.0, g);
  const auto V = PotentialSpec::gaussian(1.0, 1.0);
  const auto u = RadialField::from_function(g, [](double r) { return std::exp(-0.5 * r * r); });
  const auto e = energy(u, V, k, 2.0);
  const double grad = oracle::integrate([](double r) { return 4 * pi * r * r * r * r * std::exp(-r * r); }, 0, 30);
  const double pot = oracle::integrate([](double r) { return 4 * pi * r * r * std::exp(-2 * r * r); }, 0, 30);
  // |u|^2 = e^{-r^2} has Newton potential pi^{3/2} erf(r)/r
  const double P = oracle::integrate(
      [](double r) { return 4 * pi * r * std::exp(-r * r) * std::pow(pi, 1.5) * std::erf(r); }, 0, 30);
  EXPECT_NEAR(e.grad_sq, grad, 1e-8 * grad);
  EXPECT_NEAR(e.potential_term, pot, 1e-8 * pot);
  EXPECT_NEAR(e.P, P, 1e-8 * P);
  EXPECT_NEAR(e.E, 0.5 * grad - P / 4 + 0.5 * pot, 1e-8 * std::abs(e.E));

  const auto z = energy(RadialField(g), V, k, 2.0);
  EXPECT_EQ(z.E, 0.0);
  EXPECT_EQ(z.E0, 0.0);
  EXPECT_EQ(z.lambda_norm_sq, 0.0);
  const auto free = energy(u, PotentialSpec::zero(), k, 2.0);
  EXPECT_EQ(free.E, free.E0);
  EXPECT_EQ(free.lambda_norm_sq, free.grad_sq);
}

TEST(Potentials, LambdaNormDominatesGradient) {
  auto g = RadialGrid::make(40.0, 2048);
  RieszKernel k(2.0, g);
  std::mt19937_64 rng(77);
  const std::vector<PotentialSpec> repulsive{PotentialSpec::gaussian(1.0, 1.0), PotentialSpec::inverse_power(1.0, 3.0, 1.0),
                                             PotentialSpec::step(2.0, 1.0)};
  for (int t = 0; t < 100; ++t) {
    const auto u = oracle::random_smooth_field(g, rng);
    const auto& V = repulsive[static_cast<std::size_t>(t) % repulsive.size()];
    const auto e = energy(u, V, k, 3.0);
    EXPECT_GE(e.lambda_norm_sq, e.grad_sq);
  }
}
