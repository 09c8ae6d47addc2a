#pragma once

// Marchenko kernels.
//
// Discrete part (exact exponential sums, mu_k = mu_k(t)):
//   F11(z) = sum mu_k lambda_k e^{-nu_k z},   F21(z) = sum mu_k e^{-nu_k z}.
// Continuous part (Fourier integrals of the reflection data):
//   F12(z) = 1/(2 pi) int c1(xi) e^{i xi z} dxi,  F22(z) = 1/(2 pi) int c2(xi) e^{i xi z} dxi,
//   c1 = beta(lambda) + beta(-lambda),  c2 = (beta(lambda) - beta(-lambda)) / lambda,
//   beta(t, +-lambda) = c(+-lambda) exp(-+4 i lambda xi t).
// With F1 = F12 - F11 and F2 = F22 - F21 the Marchenko system reads
//   2 sqrt2 Psi(y) + int_x^inf K(s + y) Psi(s) ds = (F2, sqrt2 (F1 + i F2'))(x + y),
//   K = [[F2, sqrt2 (F1 - i F2')], [sqrt2 (F1 + i F2'), F2]].
// K splits into the discrete part Omega and minus the continuous part T^.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <ostream>
#include <utility>
#include <vector>

#include "gpm/errors.hpp"
#include "gpm/field_grid.hpp"
#include "gpm/parallel.hpp"
#include "gpm/scattering.hpp"

namespace gpm {

/// Spectral weights (c1, c2) at time t and real xi.
inline std::pair<cd, cd> c1_c2(const ReflectionCoefficient& refl, double t, double xi) {
  if (refl.is_zero()) return {cd{}, cd{}};
  const double lam = lambda_of_xi(xi);
  const cd phase = std::polar(1.0, -4.0 * lam * xi * t);
  const cd bp = refl.plus(lam) * phase;              // beta(t, lambda)
  const cd bm = refl.minus(lam) * std::conj(phase);  // beta(t, -lambda)
  return {bp + bm, (bp - bm) / lam};
}

/// F11, F21 and F21' at one point.
struct DiscreteKernels {
  double f11 = 0.0;
  double f21 = 0.0;
  double f21_prime = 0.0;
};

/// Order-th z-derivative of (F11, F21), summed with Kahan compensation.
inline std::pair<double, double> discrete_kernel_derivative(const ScatteringData& data, double t,
                                                            double z, int order) {
  double s11 = 0.0, c11 = 0.0, s21 = 0.0, c21 = 0.0;
  auto kahan = [](double& sum, double& comp, double v) {
    const double y = v - comp;
    const double tt = sum + y;
    comp = (tt - sum) - y;
    sum = tt;
  };
  for (std::size_t k = 0; k < data.size(); ++k) {
    const double nu = data.nu(k);
    const double term = data.mu(k, t) * std::pow(-nu, order) * std::exp(-nu * z);
    kahan(s11, c11, data.lambda(k) * term);
    kahan(s21, c21, term);
  }
  return {s11, s21};
}

inline DiscreteKernels discrete_kernels(const ScatteringData& data, double t, double z) {
  const auto [f11, f21] = discrete_kernel_derivative(data, t, z, 0);
  const auto d = discrete_kernel_derivative(data, t, z, 1);
  return {f11, f21, d.second};
}

struct FourierOptions {
  double tail_tol = 1e-14;       // L1 tail of the truncated spectral integrand
  double max_xi = 80.0;          // truncation beyond this is "insufficient decay"
  double support_radius = -1.0;  // kernel support radius; < 0 picks a family default
};

/// Sampled continuous kernels and their z-derivatives of order 0..3.
struct FourierKernels {
  Axis z;
  std::array<std::vector<cd>, 4> f12;
  std::array<std::vector<cd>, 4> f22;
  double xi_cutoff = 0.0;
  double xi_step = 0.0;
  std::size_t xi_points = 0;
  double error_bound = 0.0;  // truncation tail / (2 pi); aliasing placed below it
};

/// Trapezoid sums of the oscillatory integrals on a uniform xi grid. The xi
/// step is chosen so that the aliasing period exceeds the z range plus the
/// kernel support, and Xi from the family's tail bound.
inline FourierKernels fourier_kernels(const ReflectionCoefficient& refl, double t, const Axis& z,
                                      const FourierOptions& opt = {}) {
  FourierKernels out;
  out.z = z;
  for (auto& v : out.f12) v.assign(z.count, cd{});
  for (auto& v : out.f22) v.assign(z.count, cd{});
  if (refl.is_zero()) return out;

  const double xi_max = refl.xi_cutoff(opt.tail_tol);
  if (!(xi_max <= opt.max_xi)) {
    throw DomainError("fourier_kernels: insufficient decay, tail estimate exceeds tolerance "
                      "within max_xi");
  }
  double support = opt.support_radius;
  if (support < 0.0) {
    support = refl.family() == ReflectionFamily::Gaussian ? 14.0 / refl.width() : 60.0;
  }
  support += 4.0 * lambda_of_xi(xi_max) * std::abs(t);
  const double z_abs = std::max(std::abs(z.start), std::abs(z.back()));
  double dxi = 2.0 * kPi / (z_abs + support);
  dxi = std::min(dxi, xi_max / 64.0);
  const auto half = static_cast<long>(std::ceil(xi_max / dxi));
  dxi = xi_max / static_cast<double>(half);

  const std::size_t nxi = static_cast<std::size_t>(2 * half + 1);
  std::vector<double> xis(nxi);
  std::array<std::vector<cd>, 4> w1, w2;
  for (auto& v : w1) v.resize(nxi);
  for (auto& v : w2) v.resize(nxi);
  for (std::size_t j = 0; j < nxi; ++j) {
    const double xi = static_cast<double>(static_cast<long>(j) - half) * dxi;
    xis[j] = xi;
    const double w = (j == 0 || j + 1 == nxi ? 0.5 : 1.0) * dxi / (2.0 * kPi);
    const auto [c1, c2] = c1_c2(refl, t, xi);
    cd pw = w;
    for (int k = 0; k < 4; ++k) {
      w1[k][j] = pw * c1;
      w2[k][j] = pw * c2;
      pw *= cd(0.0, xi);
    }
  }
  parallel_for(z.count, [&](std::size_t m) {
    const double zm = z.at(m);
    std::array<cd, 4> a{}, b{};
    for (std::size_t j = 0; j < nxi; ++j) {
      const cd e = std::polar(1.0, xis[j] * zm);
      for (int k = 0; k < 4; ++k) {
        a[k] += w1[k][j] * e;
        b[k] += w2[k][j] * e;
      }
    }
    for (int k = 0; k < 4; ++k) {
      out.f12[k][m] = a[k];
      out.f22[k][m] = b[k];
    }
  });
  out.xi_cutoff = xi_max;
  out.xi_step = dxi;
  out.xi_points = nxi;
  out.error_bound = 2.0 * refl.tail_bound(xi_max) / (2.0 * kPi);
  return out;
}

struct KernelTableOptions {
  double dz = 0.005;
  FourierOptions fourier{};
};

/// Kernels valid at one time t over a z window. Discrete kernels are exact;
/// continuous ones are tabulated and read back with 4-point cubic
/// interpolation. Immutable after construction.
class KernelTable {
 public:
  KernelTable(ScatteringData data, ReflectionCoefficient refl, double t, double z_min,
              double z_max, const KernelTableOptions& opt = {})
      : data_(std::move(data)), refl_(std::move(refl)), t_(t) {
    if (!(z_max > z_min)) throw DomainError("kernel table: empty z range");
    if (!(opt.dz > 0.0)) throw DomainError("kernel table: dz must be positive");
    const auto n = static_cast<std::size_t>(std::ceil((z_max - z_min) / opt.dz)) + 1;
    z_ = Axis{z_min, opt.dz, std::max<std::size_t>(n, 4)};
    if (!refl_.is_zero()) {
      fourier_ = fourier_kernels(refl_, t_, z_, opt.fourier);
      interp_error_ = std::max({fourth_difference(fourier_.f12[0]), fourth_difference(fourier_.f22[0]),
                                fourth_difference(fourier_.f22[1])});
    }
  }

  const ScatteringData& data() const { return data_; }
  const ReflectionCoefficient& reflection() const { return refl_; }
  double t() const { return t_; }
  const Axis& z_axis() const { return z_; }
  bool has_continuous() const { return !refl_.is_zero(); }
  const FourierKernels& fourier() const { return fourier_; }

  bool covers(double z) const { return z >= z_.start - 1e-12 && z <= z_.back() + 1e-12; }

  cd f12(double z, int order = 0) const { return interpolate(fourier_.f12.at(order), z); }
  cd f22(double z, int order = 0) const { return interpolate(fourier_.f22.at(order), z); }

  DiscreteKernels discrete(double z) const { return discrete_kernels(data_, t_, z); }

  /// Discrete kernel matrix -[[F21, sqrt2 (F11 - i F21')], [sqrt2 (F11 + i F21'), F21]].
  Eigen::Matrix2cd omega(double z) const {
    const DiscreteKernels d = discrete(z);
    Eigen::Matrix2cd m;
    m << -d.f21, -kSqrt2 * cd(d.f11, -d.f21_prime), -kSqrt2 * cd(d.f11, d.f21_prime), -d.f21;
    return m;
  }

  /// Continuous kernel matrix -[[F22, sqrt2 (F12 - i F22')], [sqrt2 (F12 + i F22'), F22]].
  Eigen::Matrix2cd t_hat(double z) const {
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
    if (!has_continuous()) {
      check_range(z);
      return m;
    }
    const cd f12v = f12(z), f22v = f22(z), f22p = f22(z, 1);
    m << -f22v, -kSqrt2 * (f12v - kI() * f22p), -kSqrt2 * (f12v + kI() * f22p), -f22v;
    return m;
  }

  /// Source term (F22, sqrt2 (F12 + i F22'))(z).
  Eigen::Vector2cd forcing(double z) const {
    if (!has_continuous()) {
      check_range(z);
      return Eigen::Vector2cd::Zero();
    }
    const cd f12v = f12(z), f22v = f22(z), f22p = f22(z, 1);
    return {f22v, kSqrt2 * (f12v + kI() * f22p)};
  }

  /// Spectral truncation bound plus interpolation error estimate.
  double error_budget() const { return fourier_.error_bound + interp_error_; }
  double interpolation_error() const { return interp_error_; }

  /// Inspection dump: z and every kernel component on the table grid.
  void write_csv(std::ostream& os) const {
    os << "z,F11,F21,F21p,re_F12,im_F12,re_F22,im_F22,re_F22p,im_F22p\n";
    char buf[320];
    for (std::size_t m = 0; m < z_.count; ++m) {
      const double z = z_.at(m);
      const DiscreteKernels d = discrete(z);
      const cd a = has_continuous() ? fourier_.f12[0][m] : cd{};
      const cd b = has_continuous() ? fourier_.f22[0][m] : cd{};
      const cd c = has_continuous() ? fourier_.f22[1][m] : cd{};
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                    z, d.f11, d.f21, d.f21_prime, a.real(), a.imag(), b.real(), b.imag(), c.real(),
                    c.imag());
      os << buf;
    }
  }

 private:
  static constexpr cd kI() { return {0.0, 1.0}; }

  void check_range(double z) const {
    if (!covers(z)) throw DomainError("kernel table: z outside tabulated range");
  }

  cd interpolate(const std::vector<cd>& v, double z) const {
    check_range(z);
    if (v.empty()) return {};
    const double s = (z - z_.start) / z_.step;
    auto i = static_cast<long>(std::floor(s));
    const long last = static_cast<long>(z_.count) - 1;
    i = std::clamp(i, 1L, last - 2);
    const double u = s - static_cast<double>(i);  // in [0,1] away from the edges
    // Lagrange weights on nodes i-1, i, i+1, i+2.
    const double w0 = -u * (u - 1.0) * (u - 2.0) / 6.0;
    const double w1 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
    const double w2 = -(u + 1.0) * u * (u - 2.0) / 2.0;
    const double w3 = (u + 1.0) * u * (u - 1.0) / 6.0;
    return w0 * v[i - 1] + w1 * v[i] + w2 * v[i + 1] + w3 * v[i + 2];
  }

  // Cubic interpolation error ~ (9/16)/24 h^4 |f''''| ~ 0.0234 |fourth difference|.
  static double fourth_difference(const std::vector<cd>& v) {
    double m = 0.0;
    for (std::size_t i = 2; i + 2 < v.size(); ++i) {
      m = std::max(m, std::abs(v[i - 2] - 4.0 * v[i - 1] + 6.0 * v[i] - 4.0 * v[i + 1] + v[i + 2]));
    }
    return 0.0234375 * m;
  }

  ScatteringData data_;
  ReflectionCoefficient refl_;
  double t_ = 0.0;
  Axis z_{};
  FourierKernels fourier_{};
  double interp_error_ = 0.0;
};

/// Table covering every kernel argument 2x + p + s with x in [x_min, x_max]
/// and p, s in [0, P].
inline KernelTable operator_kernels(const ScatteringData& data, const ReflectionCoefficient& refl,
                                    double t, double x_min, double x_max, double half_line_length,
                                    const KernelTableOptions& opt = {}) {
  if (!(x_max >= x_min)) throw DomainError("operator_kernels: x_max < x_min");
  if (!(half_line_length > 0.0)) throw DomainError("operator_kernels: P must be positive");
  return KernelTable(data, refl, t, 2.0 * x_min - opt.dz, 2.0 * x_max + 2.0 * half_line_length + opt.dz,
                     opt);
}

}  // namespace gpm
