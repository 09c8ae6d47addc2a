#pragma once

// Exact reflectionless (N-soliton) fields. For beta == 0 the Marchenko
// kernel is a finite exponential sum
//   Upsilon(t,x,x+p) = sum_k (f~_k, g~_k)(t,x) exp(-nu_k p),
// and the coefficients G_k = g~_k solve an N x N linear system; then
//   u_N = 1 + 2 sqrt2 i sum_k conj(G_k),   f~_k = sqrt2 (lambda_k + i nu_k) G_k.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <vector>

#include "gpm/errors.hpp"
#include "gpm/field_grid.hpp"
#include "gpm/parallel.hpp"
#include "gpm/scattering.hpp"

namespace gpm {

inline constexpr cd kI{0.0, 1.0};

/// Exponent above which a row of the N-soliton system is rescaled.
inline constexpr double kRowRescaleExponent = 700.0;

/// Dark soliton profile U_c(x) = a tanh(a x / sqrt2) + i c / sqrt2, a = sqrt(1 - c^2/2).
inline cd soliton_profile(double c, double x) {
  if (!(std::abs(c) < kSqrt2)) throw DomainError("soliton_profile: |c| must be < sqrt(2)");
  const double a = std::sqrt(1.0 - 0.5 * c * c);
  return {a * std::tanh(a * x / kSqrt2), c / kSqrt2};
}

/// Closed-form one-soliton attached to (lambda, mu0):
///   u = 1 + 4 nu (i lambda - nu) / (1 - 2 sqrt2 nu mu0^{-1} e^{2 nu (x - 2 lambda t)}).
inline cd one_soliton(double lambda, double mu0, double t, double x) {
  if (!(mu0 < 0.0)) throw DomainError("one_soliton: mu0 must be negative");
  const double nu = nu_of_lambda(lambda);
  const double e = 2.0 * nu * (x - 2.0 * lambda * t);
  const cd num = 4.0 * nu * cd(-nu, lambda);
  // -2 sqrt2 nu / mu0 > 0, so the denominator is >= 1.
  const double coef = -2.0 * kSqrt2 * nu / mu0;
  if (e > kRowRescaleExponent) {
    const double inv = std::exp(-e);
    return 1.0 + num * inv / (inv + coef);
  }
  return 1.0 + num / (1.0 + coef * std::exp(e));
}

/// Explicit two-soliton for lambda = (-1/2, 1/2), mu0 = (-1, -1).
inline cd two_soliton_example(double t, double x) {
  // Divide through by the dominant exponential to stay finite for large |x|, |t|.
  const double m = std::max(std::abs(x), std::abs(t));
  const double a = 5.0 * 0.5 * (std::exp(x - m) + std::exp(-x - m)) +
                   3.0 * 0.5 * (std::exp(x - m) - std::exp(-x - m));
  const double sh = 0.5 * (std::exp(t - m) - std::exp(-t - m));
  const double ch = 0.5 * (std::exp(t - m) + std::exp(-t - m));
  return cd(a, 4.0 * kSqrt2 * sh) / (a + 4.0 * kSqrt2 * ch);
}

struct NSolitonSystem {
  Eigen::MatrixXcd matrix;
  Eigen::VectorXcd rhs;
  /// Rows multiplied by exp(-2 nu_k (x - 2 lambda_k t)) to avoid overflow.
  std::vector<bool> rescaled;
};

/// Row k:  -2 mu_k(0)^{-1}/(lambda_k - i nu_k) e^{2 nu_k (x - 2 lambda_k t)} G_k
///         + sqrt2 sum_j ((lambda_k + lambda_j)/(nu_k + nu_j) + i) G_j = 1.
inline NSolitonSystem assemble_system(const ScatteringData& data, double t, double x) {
  const std::size_t n = data.size();
  NSolitonSystem sys{Eigen::MatrixXcd(n, n), Eigen::VectorXcd::Ones(n), std::vector<bool>(n, false)};
  for (std::size_t k = 0; k < n; ++k) {
    const double lk = data.lambda(k), nk = data.nu(k);
    const double expo = 2.0 * nk * (x - 2.0 * lk * t);
    const cd diag = -2.0 / data.mu0(k) / cd(lk, -nk);
    double row_scale = 1.0;
    cd extra;
    if (expo > kRowRescaleExponent) {
      row_scale = std::exp(-expo);
      extra = diag;
      sys.rescaled[k] = true;
      sys.rhs(k) = row_scale;
    } else {
      extra = diag * std::exp(expo);
    }
    for (std::size_t j = 0; j < n; ++j) {
      const cd dense = kSqrt2 * cd((lk + data.lambda(j)) / (nk + data.nu(j)), 1.0);
      sys.matrix(k, j) = dense * row_scale;
    }
    sys.matrix(k, k) += extra;
  }
  return sys;
}

/// Solved coefficients at one (t, x). g_tilde is G; f_tilde follows from it.
struct NSolitonCoefficients {
  double t = 0.0;
  double x = 0.0;
  std::vector<cd> f_tilde;  // f_k(t,x) e^{-nu_k x}
  std::vector<cd> g_tilde;  // g_k(t,x) e^{-nu_k x} = G_k
  double residual = 0.0;    // ||rhs - A G||_inf of the assembled system

  /// Unscaled f_k = f~_k e^{nu_k x}; may overflow for large x.
  cd f(const ScatteringData& d, std::size_t k) const { return f_tilde[k] * std::exp(d.nu(k) * x); }
  cd g(const ScatteringData& d, std::size_t k) const { return g_tilde[k] * std::exp(d.nu(k) * x); }
};

inline NSolitonCoefficients solve_G(const ScatteringData& data, double t, double x) {
  NSolitonCoefficients out;
  out.t = t;
  out.x = x;
  const std::size_t n = data.size();
  if (n == 0) return out;
  const NSolitonSystem sys = assemble_system(data, t, x);
  if (!sys.matrix.allFinite()) throw SolverError("solve_G: non-finite system entries");
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(sys.matrix);
  const Eigen::VectorXcd sol = lu.solve(sys.rhs);
  if (!sol.allFinite()) throw SolverError("solve_G: LU solve produced non-finite values");
  out.residual = (sys.rhs - sys.matrix * sol).cwiseAbs().maxCoeff();
  const double rhs_norm = sys.rhs.cwiseAbs().maxCoeff();
  if (!(out.residual <= 1e-10 * (1.0 + rhs_norm))) {
    throw SolverError("solve_G: back-substitution residual above 1e-10");
  }
  out.g_tilde.resize(n);
  out.f_tilde.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.g_tilde[k] = sol(static_cast<Eigen::Index>(k));
    out.f_tilde[k] = kSqrt2 * cd(data.lambda(k), data.nu(k)) * out.g_tilde[k];
  }
  return out;
}

/// u = 1 + 2 sqrt2 i sum_k conj(G_k).
inline cd u_from_coefficients(const NSolitonCoefficients& c) {
  cd s{};
  for (const cd& g : c.g_tilde) s += std::conj(g);
  return 1.0 + 2.0 * kSqrt2 * kI * s;
}

inline cd u_N(const ScatteringData& data, double t, double x) {
  if (data.empty()) return 1.0;
  return u_from_coefficients(solve_G(data, t, x));
}

/// Reflectionless kernel sampled on the shifted half-line:
/// returns (Upsilon_1, Upsilon_2)(t, x, x + p).
inline Eigen::Vector2cd kernel_upsilon(const ScatteringData& data, const NSolitonCoefficients& c,
                                       double p) {
  if (!(p >= 0.0)) throw DomainError("kernel_upsilon: p must be >= 0");
  Eigen::Vector2cd v = Eigen::Vector2cd::Zero();
  for (std::size_t k = 0; k < data.size(); ++k) {
    const double e = std::exp(-data.nu(k) * p);
    v(0) += c.f_tilde[k] * e;
    v(1) += c.g_tilde[k] * e;
  }
  return v;
}

inline Eigen::Vector2cd kernel_upsilon(const ScatteringData& data, double t, double x, double p) {
  if (!(p >= 0.0)) throw DomainError("kernel_upsilon: p must be >= 0");
  if (data.empty()) return Eigen::Vector2cd::Zero();
  return kernel_upsilon(data, solve_G(data, t, x), p);
}

/// Hermitian matrix (A - D conj(B) + I) D^ whose positivity certifies that
/// the 2N x 2N reflectionless system is invertible:
///   entry (i,j) = (mu_i mu_j + conj(b_i) b_j) e^{-(nu_i+nu_j) x}/(nu_i+nu_j) - mu_i delta_ij,
/// with b_i = sqrt2 mu_i (lambda_i - i nu_i) and mu_i = mu_i(t).
inline Eigen::MatrixXcd gram_matrix(const ScatteringData& data, double t, double x) {
  const std::size_t n = data.size();
  Eigen::MatrixXcd g(n, n);
  std::vector<double> mu(n);
  std::vector<cd> b(n);
  for (std::size_t i = 0; i < n; ++i) {
    mu[i] = data.mu(i, t);
    b[i] = kSqrt2 * mu[i] * cd(data.lambda(i), -data.nu(i));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double s = data.nu(i) + data.nu(j);
      g(i, j) = (mu[i] * mu[j] + std::conj(b[i]) * b[j]) * std::exp(-s * x) / s;
    }
    g(i, i) -= mu[i];
  }
  return g;
}

inline double gram_min_eigenvalue(const ScatteringData& data, double t, double x) {
  if (data.empty()) return std::numeric_limits<double>::infinity();
  const Eigen::MatrixXcd g = gram_matrix(data, t, x);
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  if ((g - g.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw SolverError("gram_min_eigenvalue: assembled matrix is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolverError("gram_min_eigenvalue: eigen-solve failed");
  return es.eigenvalues().minCoeff();
}

/// u_N on every grid node; parallel over nodes.
inline FieldGrid grid_eval(const ScatteringData& data, const GridSpec& spec) {
  FieldGrid out(spec.t_axis(), spec.x_axis(), Provenance::NSoliton);
  const std::size_t nx = out.x_axis().count;
  parallel_for(out.values().size(), [&](std::size_t idx) {
    const std::size_t i = idx / nx, j = idx % nx;
    out(i, j) = u_N(data, out.t_axis().at(i), out.x_axis().at(j));
  });
  return out;
}

}  // namespace gpm
