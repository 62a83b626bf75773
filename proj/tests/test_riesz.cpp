#include "hartree_lab/riesz.hpp"
#include "support.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace hlab;

namespace {

const double pi = std::numbers::pi;

double bump(double s) { return std::exp(-s * s) * (1.0 + 0.3 * s * s); }

// int_0^inf k(r,s) s^2 g(s) ds in extended precision. The variable t = |s - r|
// is integrated directly so the singular factor never suffers cancellation.
double kernel_oracle(double gamma, double r, auto g) {
  using L = long double;
  using GK = boost::math::quadrature::gauss_kronrod<L, 61>;
  const L a = gamma - 1.0L, R = r;
  auto f = [&](L s, L t) -> L {
    const L k = std::abs(a) < 1e-12L ? 2 * std::numbers::pi_v<L> / (R * s) * std::log((R + s) / t)
                                     : 2 * std::numbers::pi_v<L> / (a * R * s) * (std::pow(R + s, a) - std::pow(t, a));
    return k * s * s * L(g(double(s)));
  };
  // t = v^4 turns t^{gamma-1} into a smooth integrand for every gamma in (0,3).
  auto sub = [&](L sign) {
    return [&f, &R, sign](L v) {
      const L t = v * v * v * v;
      return 4 * v * v * v * f(R + sign * t, t);
    };
  };
  const L below = GK::integrate(sub(-1), L(0), std::pow(R, 0.25L), 12, 1e-13L);
  const L above = GK::integrate(sub(1), L(0), L(1), 12, 1e-13L) + GK::integrate([&](L t) { return f(R + t, t); }, L(1), L(12), 12, 1e-13L);
  return double(below + above);
}

std::vector<double> sampled(const RadialGrid& g, auto f) {
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = f(g.node(i));
  return out;
}

// Volume of the unit ball inside each node cell divided by the node weight.
std::vector<double> ball_density(const RadialGrid& g) {
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double lo = g.node(i) - 0.5 * g.dr(), hi = std::min(1.0, g.node(i) + 0.5 * g.dr());
    out[i] = hi > lo ? (hi * hi * hi - lo * lo * lo) / (3.0 * g.node(i) * g.node(i) * g.dr()) : 0.0;
  }
  return out;
}

}  // namespace

TEST(Riesz, KernelClosedForms) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int k = 0; k < 50; ++k) {
    const double r = u(rng), s = u(rng);
    EXPECT_NEAR(RieszKernel::kernel_value(2.0, r, s), 4 * pi / std::max(r, s), 1e-12);
    for (double g : {0.5, 1.0, 1.7, 2.5}) {
      EXPECT_DOUBLE_EQ(RieszKernel::kernel_value(g, r, s), RieszKernel::kernel_value(g, s, r));
      EXPECT_GE(RieszKernel::kernel_value(g, r, s), 0.0);
    }
  }
  EXPECT_NEAR(RieszKernel::kernel_value(1.0, 1.0, 2.0), pi * std::log(3.0), 1e-14);
  EXPECT_THROW(RieszKernel(3.0, RadialGrid::make(10, 64)), std::invalid_argument);
  EXPECT_THROW(RieszKernel(0.0, RadialGrid::make(10, 64)), std::invalid_argument);
}

TEST(Riesz, ZeroInZeroOut) {
  auto g = RadialGrid::make(20.0, 512);
  for (double gamma : {0.5, 1.0, 2.0}) {
    RieszKernel k(gamma, g);
    for (double h : k.convolve(std::vector<double>(g->size(), 0.0))) EXPECT_EQ(h, 0.0);
  }
}

TEST(Riesz, MatchesHighPrecisionQuadrature) {
  auto g = RadialGrid::make(40.0, 2048);
  const auto data = sampled(*g, bump);
  for (double gamma : {0.5, 1.0, 1.5, 2.0, 2.5}) {
    RieszKernel k(gamma, g);
    const auto h = k.convolve(data);
    for (std::size_t i : {0, 10, 50, 200, 700, 1500}) {
      const double oracle = kernel_oracle(gamma, g->node(i), bump);
      EXPECT_NEAR(h[i], oracle, 1e-8 * std::abs(oracle)) << "gamma=" << gamma << " r=" << g->node(i);
    }
    // h(0) = 4 pi int s^{gamma-1} g
    boost::math::quadrature::tanh_sinh<double> ts;
    const double origin = 4 * pi * (ts.integrate([&](double s) { return std::pow(s, gamma - 1) * bump(s); }, 0.0, 1.0) +
                                    oracle::integrate([&](double s) { return std::pow(s, gamma - 1) * bump(s); }, 1.0, 15.0));
    EXPECT_NEAR(k.convolve_origin(data), origin, 1e-8 * origin) << "gamma=" << gamma;
  }
}

TEST(Riesz, FastPathsAgreeWithDense) {
  auto g = RadialGrid::make(30.0, 700);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 3; ++trial) {
    const auto f = oracle::random_smooth_field(g, rng);
    const auto data = f.real_part();
    for (double gamma : {0.7, 1.0, 2.0, 2.4}) {
      RieszKernel dense(gamma, g, RieszMethod::dense);
      RieszKernel fast(gamma, g);
      const auto a = dense.convolve(data);
      const auto b = fast.convolve(data);
      double scale = 0.0;
      for (double x : a) scale = std::max(scale, std::abs(x));
      for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-10 * scale);
    }
    RieszKernel fft2(2.0, g, RieszMethod::fft), newton(2.0, g, RieszMethod::newton);
    const auto a = fft2.convolve(data);
    const auto b = newton.convolve(data);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-10 * std::abs(a[0]));
  }
}

TEST(Riesz, UniformBallNewtonTheorem) {
  auto g = RadialGrid::make(10.0, 2048);
  RieszKernel k(2.0, g);
  const auto rho = ball_density(*g);
  const auto h = k.convolve(rho);
  for (std::size_t i = 0; i < g->size(); ++i) {
    const double r = g->node(i);
    if (r >= 1.0 + g->dr()) {
      EXPECT_NEAR(h[i], 4 * pi / 3 / r, 1e-4 * 4 * pi / 3 / r) << r;
    }
  }
  EXPECT_NEAR(k.convolve_origin(rho), 2 * pi, 1e-4 * 2 * pi);
}

TEST(Riesz, SlopeMatchesAnalyticDerivative) {
  // gamma = 2 and g = e^{-r^2}: h = pi^{3/2} erf(r)/r.
  auto g = RadialGrid::make(20.0, 1024);
  const auto data = sampled(*g, [](double s) { return std::exp(-s * s); });
  for (double gamma : {2.0, 1.3}) {
    RieszKernel k(gamma, g);
    const auto hs = k.convolve_with_slope(data);
    for (std::size_t i : {3, 40, 100, 300}) {
      const double r = g->node(i);
      const double e = 1e-5;
      auto h_at = [&](double x) { return kernel_oracle(gamma, x, [](double s) { return std::exp(-s * s); }); };
      const double fd = (h_at(r + e) - h_at(r - e)) / (2 * e);
      EXPECT_NEAR(hs.dh[i], fd, 1e-6 * (1.0 + std::abs(fd))) << gamma << " " << r;
    }
  }
  RieszKernel k(2.0, g);
  const auto hs = k.convolve_with_slope(data);
  for (std::size_t i = 0; i < 400; ++i) {
    const double r = g->node(i);
    const double exact = std::pow(pi, 1.5) * (2 * std::exp(-r * r) / std::sqrt(pi) / r - std::erf(r) / (r * r));
    EXPECT_NEAR(hs.dh[i], exact, 1e-9);
  }
}

TEST(Riesz, PairingIsSymmetric) {
  auto g = RadialGrid::make(30.0, 1024);
  std::mt19937_64 rng(4);
  for (double gamma : {0.5, 1.0, 2.0, 2.5}) {
    RieszKernel k(gamma, g);
    for (int t = 0; t < 5; ++t) {
      const auto f = oracle::random_smooth_field(g, rng).real_part();
      const auto h = oracle::random_smooth_field(g, rng).real_part();
      const double a = k.pairing(f, h), b = k.pairing(h, f);
      EXPECT_NEAR(a, b, 1e-10 * std::abs(a));
    }
  }
}

TEST(Riesz, HardyLittlewoodSobolevRatioBounded) {
  auto grid = RadialGrid::make(40.0, 2048);
  std::mt19937_64 rng(8);
  const double gamma = 2.0, r = 4.0, q = 1.0 / (1.0 / r + gamma / 3.0);
  RieszKernel k(gamma, grid);
  double lo = 1e300, hi = 0.0;
  for (int t = 0; t < 50; ++t) {
    const auto f = oracle::random_smooth_field(grid, rng);
    const auto g = modulus_power(f, 1.0);
    const auto h = k.convolve(g);
    const double ratio = lp_norm(RadialField::from_real(grid, h), r) / lp_norm(RadialField::from_real(grid, g), q);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  EXPECT_TRUE(std::isfinite(hi));
  EXPECT_LT(hi / lo, 10.0);
}

TEST(Riesz, PotentialEnergyHomogeneityAndBall) {
  auto g = RadialGrid::make(40.0, 2048);
  RieszKernel k(2.0, g);
  EXPECT_EQ(potential_energy(k, RadialField(g), 3.0), 0.0);
  std::mt19937_64 rng(2);
  const auto u = oracle::random_smooth_field(g, rng);
  for (double p : {2.0, 3.0, 2.5}) {
    EXPECT_NEAR(potential_energy(k, complex(2.0) * u, p), std::pow(2.0, 2 * p) * potential_energy(k, u, p),
                1e-12 * std::pow(2.0, 2 * p) * potential_energy(k, u, p));
  }
  auto fine = RadialGrid::make(10.0, 2048);
  RieszKernel kf(2.0, fine);
  const auto rho = ball_density(*fine);
  EXPECT_NEAR(kf.pairing(rho, rho), 32 * pi * pi / 15, 1e-4 * 32 * pi * pi / 15);
}

TEST(Riesz, MonteCarloSpotCheck) {
  auto g = RadialGrid::make(20.0, 1024);
  const double gamma = 1.0;
  RieszKernel k(gamma, g);
  const auto h = k.convolve(sampled(*g, bump));
  // z = y - x with density ~ |z|^{gamma-3} on |z| < Rz, so each sample is (4 pi Rz^gamma / gamma) g(|x+z|).
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double Rz = 12.0;
  const std::size_t i = 60;
  const double x = g->node(i);
  double s1 = 0.0, s2 = 0.0;
  const int N = 400000;
  for (int m = 0; m < N; ++m) {
    const double rho = Rz * std::pow(u(rng), 1.0 / gamma);
    const double c = 2 * u(rng) - 1;
    const double d = std::sqrt(x * x + rho * rho + 2 * x * rho * c);
    const double v = 4 * pi * std::pow(Rz, gamma) / gamma * bump(d);
    s1 += v;
    s2 += v * v;
  }
  const double mean = s1 / N, se = std::sqrt((s2 / N - mean * mean) / N);
  EXPECT_NEAR(h[i], mean, 4 * se);
}
