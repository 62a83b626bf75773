#pragma once

// Riesz potential (I_gamma * g)(r) = int g(|y|) |x - y|^{gamma-3} dy for radial g.
//
// After the angular integration the potential of a radial g is
//   h(r) = -(2 pi / ((gamma-1) r)) int_R phi(t) |r - t|^{gamma-1} dt,   phi(t) = t g(|t|),
// with |.|^{gamma-1} replaced by log|.| (and the 1/(gamma-1) dropped) when gamma = 1.
// phi is odd, so the half-line problem becomes a convolution on the full line.
// The singular kernel is integrated by a punctured trapezoid rule plus the
// generalized Euler-Maclaurin (zeta-function) endpoint corrections, which keep
// the rule accurate to O(dr^{gamma+5}) for smooth g.

#include "hartree_lab/grid.hpp"

#include <boost/math/special_functions/zeta.hpp>
#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace hlab {

enum class RieszMethod { automatic, fft, dense, newton };

class RieszKernel {
 public:
  RieszKernel(double gamma, GridPtr grid, RieszMethod method = RieszMethod::automatic)
      : gamma_(gamma), alpha_(gamma - 1.0), grid_(std::move(grid)), method_(method) {
    if (!(gamma > 0.0 && gamma < 3.0)) throw std::invalid_argument("riesz: gamma must lie in (0,3)");
    if (!grid_) throw std::invalid_argument("riesz: null grid");
    log_kernel_ = std::abs(alpha_) < 1e-9;
    if (method_ == RieszMethod::automatic) {
      method_ = std::abs(gamma_ - 2.0) < 1e-15 ? RieszMethod::newton : RieszMethod::fft;
    }
    if (method_ == RieszMethod::newton && std::abs(gamma_ - 2.0) >= 1e-15) {
      throw std::invalid_argument("riesz: the Newton path needs gamma = 2");
    }
    const double dr = grid_->dr();
    const std::size_t n = grid_->size();
    lag_.resize(2 * n + 1);
    for (std::size_t m = 1; m < lag_.size(); ++m) lag_[m] = kernel_1d(static_cast<double>(m) * dr);
    setup_corrections();
    if (method_ == RieszMethod::fft) setup_fft();
  }

  RieszKernel(const RieszKernel&) = delete;
  RieszKernel& operator=(const RieszKernel&) = delete;

  [[nodiscard]] double gamma() const { return gamma_; }
  [[nodiscard]] const RadialGrid& grid() const { return *grid_; }
  [[nodiscard]] const GridPtr& grid_ptr() const { return grid_; }
  [[nodiscard]] RieszMethod method() const { return method_; }

  /// Angular-averaged kernel k(r,s), so that h(r) = int_0^inf k(r,s) g(s) s^2 ds.
  [[nodiscard]] static double kernel_value(double gamma, double r, double s) {
    const double pi = std::numbers::pi;
    if (r == 0.0 || s == 0.0) return 4.0 * pi * std::pow(std::max(r, s), gamma - 3.0);
    if (r == s) {
      if (gamma <= 1.0) return std::numeric_limits<double>::infinity();
      return 2.0 * pi * std::pow(2.0 * r, gamma - 1.0) / ((gamma - 1.0) * r * s);
    }
    const double a = gamma - 1.0;
    if (std::abs(a) < 1e-9) return 2.0 * pi / (r * s) * std::log((r + s) / std::abs(r - s));
    return 2.0 * pi / (a * r * s) * (std::pow(r + s, a) - std::pow(std::abs(r - s), a));
  }

  /// h(r_i) = (I_gamma * g)(r_i) at every node.
  [[nodiscard]] std::vector<double> convolve(std::span<const double> g) const {
    check_size(g.size());
    const auto phi = odd_extension(g);
    const auto integral = line_integral(phi);
    std::vector<double> h(g.size());
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = prefactor() / grid_->node(i) * integral[i];
    return h;
  }

  /// h(0) = 4 pi int_0^inf s^{gamma-1} g(s) ds.
  [[nodiscard]] double convolve_origin(std::span<const double> g) const {
    check_size(g.size());
    const double dr = grid_->dr();
    double acc = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) acc += std::pow(grid_->node(j), alpha_) * g[j];
    acc *= dr;
    // Even extension g = g0 + b r^2 + c r^4 through the first three nodes.
    const double g0 = (15.0 * g[0] - 6.0 * g[1] + g[2]) / 10.0;
    const double g2 = (-13.0 * g[0] + 16.0 * g[1] - 3.0 * g[2]) / (12.0 * dr * dr);
    acc -= boost::math::zeta(-alpha_) * g0 * std::pow(dr, alpha_ + 1.0);
    acc -= boost::math::zeta(-alpha_ - 2.0) * g2 * std::pow(dr, alpha_ + 3.0) / 2.0;
    return 4.0 * std::numbers::pi * acc;
  }

  struct PotentialWithSlope {
    std::vector<double> h;
    std::vector<double> dh;  // d/dr h
  };

  /// h and its radial derivative. The derivative moves onto phi (integration by
  /// parts) and phi' is taken spectrally, so it costs one extra convolution.
  [[nodiscard]] PotentialWithSlope convolve_with_slope(std::span<const double> g) const {
    check_size(g.size());
    PotentialWithSlope out{convolve(g), std::vector<double>(g.size())};
    const std::size_t n = g.size();
    std::vector<double> phi(n);
    for (std::size_t j = 0; j < n; ++j) phi[j] = grid_->node(j) * g[j];
    const auto dphi = grid_->spectral().odd_derivative(phi);  // j = 0..n+1
    std::vector<double> full(2 * n + 1);
    for (std::size_t j = 0; j <= n; ++j) {
      full[n + j] = dphi[j];
      full[n - j] = dphi[j];
    }
    const auto integral = line_integral(full);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = grid_->node(i);
      out.dh[i] = -out.h[i] / r + prefactor() / r * integral[i];
    }
    return out;
  }

  /// int (I_gamma * f) g dx with node weights.
  [[nodiscard]] double pairing(std::span<const double> f, std::span<const double> g) const {
    const auto h = convolve(f);
    const auto w = grid_->weights();
    double acc = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) acc += w[i] * h[i] * g[i];
    return acc;
  }

 private:
  [[nodiscard]] double kernel_1d(double t) const {
    return log_kernel_ ? std::log(t) : std::pow(t, alpha_);
  }
  [[nodiscard]] double prefactor() const {
    return log_kernel_ ? -2.0 * std::numbers::pi : -2.0 * std::numbers::pi / alpha_;
  }

  void check_size(std::size_t m) const {
    if (m != grid_->size()) throw std::invalid_argument("riesz: grid mismatch");
  }

  // phi on the full line, index j + n for t = j*dr, j = -n..n.
  [[nodiscard]] std::vector<double> odd_extension(std::span<const double> g) const {
    const std::size_t n = g.size();
    std::vector<double> full(2 * n + 1, 0.0);
    for (std::size_t j = 1; j <= n; ++j) {
      const double v = grid_->node(j - 1) * g[j - 1];
      full[n + j] = v;
      full[n - j] = -v;
    }
    return full;
  }

  void setup_corrections() {
    const double dr = grid_->dr();
    if (log_kernel_) {
      const double pi2 = 2.0 * std::numbers::pi;
      corr_[0] = -(std::log(pi2) - std::log(dr)) * dr;
      corr_[1] = -boost::math::zeta(3.0) * std::pow(dr, 3) / (pi2 * pi2);
      corr_[2] = boost::math::zeta(5.0) * std::pow(dr, 5) / std::pow(pi2, 4);
    } else {
      const std::array<double, 3> factorial{1.0, 2.0, 24.0};
      for (int k = 0; k < 3; ++k) {
        corr_[k] = -2.0 * boost::math::zeta(-alpha_ - 2.0 * k) / factorial[k] *
                   std::pow(dr, alpha_ + 2.0 * k + 1.0);
      }
    }
  }

  // I_i = int f(t) K(r_i - t) dt for a full-line sample array f (length 2n+1).
  [[nodiscard]] std::vector<double> line_integral(const std::vector<double>& f) const {
    const std::size_t n = grid_->size();
    const double dr = grid_->dr();
    std::vector<double> sum;
    switch (method_) {
      case RieszMethod::newton: sum = newton_sum(f); break;
      case RieszMethod::fft: sum = fft_sum(f); break;
      default: sum = dense_sum(f); break;
    }
    // Even derivatives of f at the nodes from fourth-order differences; f = 0 off the line.
    const long len = static_cast<long>(f.size());
    auto at = [&](long j) { return (j < 0 || j >= len) ? 0.0 : f[static_cast<std::size_t>(j)]; };
    std::vector<double> d2(f.size() + 2);
    for (long j = -1; j <= len; ++j) {
      d2[static_cast<std::size_t>(j + 1)] =
          (-at(j - 2) + 16.0 * at(j - 1) - 30.0 * at(j) + 16.0 * at(j + 1) - at(j + 2)) /
          (12.0 * dr * dr);
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = n + i + 1;
      const double f2 = d2[c + 1];
      const double f4 = (d2[c] - 2.0 * f2 + d2[c + 2]) / (dr * dr);
      out[i] = dr * sum[i] + corr_[0] * f[c] + corr_[1] * f2 + corr_[2] * f4;
    }
    return out;
  }

  // Punctured sums S_i = sum_{j != i} f_j K(|i-j| dr), i = 1..n, direct O(n^2).
  [[nodiscard]] std::vector<double> dense_sum(const std::vector<double>& f) const {
    const std::size_t n = grid_->size();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 1; i <= n; ++i) {
      const std::size_t c = n + i;
      double acc = 0.0;
      for (std::size_t j = 0; j < f.size(); ++j) {
        if (j != c) acc += f[j] * lag_[j > c ? j - c : c - j];
      }
      out[i - 1] = acc;
    }
    return out;
  }

  // K(t) = |t|: sum_j f_j |t_i - t_j| from running sums of f and t*f.
  [[nodiscard]] std::vector<double> newton_sum(const std::vector<double>& f) const {
    const std::size_t n = grid_->size();
    const double dr = grid_->dr();
    const std::size_t len = f.size();
    std::vector<double> c0(len + 1, 0.0), c1(len + 1, 0.0);
    for (std::size_t j = 0; j < len; ++j) {
      const double t = (static_cast<double>(j) - static_cast<double>(n)) * dr;
      c0[j + 1] = c0[j] + f[j];
      c1[j + 1] = c1[j] + t * f[j];
    }
    std::vector<double> out(n);
    for (std::size_t i = 1; i <= n; ++i) {
      const std::size_t c = n + i;
      const double t = static_cast<double>(i) * dr;
      const double below = t * c0[c] - c1[c];
      const double above = (c1[len] - c1[c + 1]) - t * (c0[len] - c0[c + 1]);
      out[i - 1] = below + above;
    }
    return out;
  }

  void setup_fft() {
    const std::size_t n = grid_->size();
    fft_size_ = good_size(3 * n + 1);
    std::vector<double> t(fft_size_, 0.0);
    // Lags L in [-(n-1), 2n] land at L mod N without aliasing.
    for (std::size_t m = 1; m <= 2 * n; ++m) t[m] = lag_[m];
    for (std::size_t m = 1; m < n; ++m) t[fft_size_ - m] = lag_[m];
    lag_hat_.resize(fft_size_ / 2 + 1);
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      const int len = static_cast<int>(fft_size_);
      auto in = detail::fftw_buffer(fft_size_);
      auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * lag_hat_.size()));
      forward_.reset(fftw_plan_dft_r2c_1d(len, in.get(), out, FFTW_ESTIMATE | FFTW_UNALIGNED));
      backward_.reset(fftw_plan_dft_c2r_1d(len, out, in.get(), FFTW_ESTIMATE | FFTW_UNALIGNED));
      fftw_free(out);
    }
    std::vector<complex> hat(lag_hat_.size());
    fftw_execute_dft_r2c(forward_.get(), t.data(), reinterpret_cast<fftw_complex*>(hat.data()));
    const double scale = 1.0 / static_cast<double>(fft_size_);
    for (std::size_t k = 0; k < hat.size(); ++k) lag_hat_[k] = hat[k] * scale;
  }

  [[nodiscard]] std::vector<double> fft_sum(const std::vector<double>& f) const {
    const std::size_t n = grid_->size();
    std::vector<double> buf(fft_size_, 0.0);
    std::copy(f.begin(), f.end(), buf.begin());
    std::vector<complex> hat(lag_hat_.size());
    auto* hat_raw = reinterpret_cast<fftw_complex*>(hat.data());
    fftw_execute_dft_r2c(forward_.get(), buf.data(), hat_raw);
    for (std::size_t k = 0; k < hat.size(); ++k) hat[k] *= lag_hat_[k];
    // c2r destroys its input; hat is scratch.
    fftw_execute_dft_c2r(backward_.get(), hat_raw, buf.data());
    return {buf.begin() + static_cast<long>(n + 1), buf.begin() + static_cast<long>(2 * n + 1)};
  }

  static std::size_t good_size(std::size_t m) {
    for (std::size_t k = m;; ++k) {
      std::size_t x = k;
      for (std::size_t p : {2u, 3u, 5u}) {
        while (x % p == 0) x /= p;
      }
      if (x == 1) return k;
    }
  }

  double gamma_;
  double alpha_;
  GridPtr grid_;
  RieszMethod method_;
  bool log_kernel_ = false;
  std::vector<double> lag_;  // K(m dr), m = 0..2n, K(0) unused
  std::array<double, 3> corr_{};
  std::size_t fft_size_ = 0;
  std::vector<complex> lag_hat_;
  detail::FftwPlan forward_;
  detail::FftwPlan backward_;
};

using KernelPtr = std::shared_ptr<const RieszKernel>;

/// |u|^p at every node.
inline std::vector<double> modulus_power(const RadialField& u, double p) {
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = std::pow(std::abs(u[i]), p);
  return out;
}

/// P(u) = int (I_gamma * |u|^p) |u|^p dx.
inline double potential_energy(const RieszKernel& kern, const RadialField& u, double p) {
  if (!u.grid().same_as(kern.grid())) throw std::invalid_argument("riesz: grid mismatch");
  const auto g = modulus_power(u, p);
  return kern.pairing(g, g);
}

}  // namespace hlab
