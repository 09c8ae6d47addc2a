#pragma once

// Long-time behaviour of N-soliton fields. As t -> -+inf, along the ray
// x = eta + 2 lambda_k t the field approaches a phase-rotated, shifted copy of
// the one-soliton built from the same (lambda_k, mu_k0):
//   u_N(t, eta + 2 lambda_k t) -> A_k U_k(eta - eta_k),
//   e^{-2 nu_k eta_k} = prod_j (1 - 2 lambda_k lambda_j + 2 nu_k nu_j) / (1 - 2 lambda_k lambda_j - 2 nu_k nu_j),
//   A_k = exp(2 i sum_j theta_j),   theta_j = arccos(lambda_j sqrt2),
// with j < k for t -> -inf and j > k for t -> +inf. Indices here are 1-based.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "gpm/errors.hpp"
#include "gpm/field_grid.hpp"
#include "gpm/nsoliton.hpp"
#include "gpm/scattering.hpp"

namespace gpm {

enum class TimeSign { Minus, Plus };

inline char to_char(TimeSign s) { return s == TimeSign::Minus ? '-' : '+'; }

inline TimeSign time_sign_from_string(const std::string& s) {
  if (s == "-" || s == "minus") return TimeSign::Minus;
  if (s == "+" || s == "plus") return TimeSign::Plus;
  throw ConfigError("sign must be '+' or '-': " + s);
}

namespace detail {

inline void check_index(const ScatteringData& data, std::size_t k) {
  if (k < 1 || k > data.size()) throw DomainError("soliton index out of range (1-based)");
}

/// Indices j (0-based) that soliton k (1-based) has already met / will meet.
template <typename Fn>
void for_partners(const ScatteringData& data, std::size_t k, TimeSign sign, Fn&& fn) {
  if (sign == TimeSign::Minus) {
    for (std::size_t j = 0; j + 1 < k; ++j) fn(j);
  } else {
    for (std::size_t j = k; j < data.size(); ++j) fn(j);
  }
}

}  // namespace detail

/// Shift from the spectral (lambda, nu) form.
inline double shift_eta_lambda_form(const ScatteringData& data, std::size_t k, TimeSign sign) {
  detail::check_index(data, k);
  const double lk = data.lambda(k - 1), nk = data.nu(k - 1);
  double log_sum = 0.0;
  detail::for_partners(data, k, sign, [&](std::size_t j) {
    const double lj = data.lambda(j), nj = data.nu(j);
    const double num = 1.0 - 2.0 * lk * lj + 2.0 * nk * nj;
    const double den = 1.0 - 2.0 * lk * lj - 2.0 * nk * nj;
    if (!(den > 0.0)) throw SolverError("shift_eta: non-positive denominator for distinct spectra");
    log_sum += std::log(num / den);
  });
  return -log_sum / (2.0 * nk);
}

/// Same shift written in soliton speeds c = 2 lambda.
inline double shift_eta_speed_form(const ScatteringData& data, std::size_t k, TimeSign sign) {
  detail::check_index(data, k);
  const double ck = speed_of_lambda(data.lambda(k - 1));
  const double rk = std::sqrt(2.0 - ck * ck);
  double log_sum = 0.0;
  detail::for_partners(data, k, sign, [&](std::size_t j) {
    const double cj = speed_of_lambda(data.lambda(j));
    const double rj = std::sqrt(2.0 - cj * cj);
    log_sum += std::log((2.0 - cj * ck + rj * rk) / (2.0 - cj * ck - rj * rk));
  });
  return -log_sum / rk;
}

/// Shift eta_k^{sign}; both forms are evaluated and must agree.
inline double shift_eta(const ScatteringData& data, std::size_t k, TimeSign sign) {
  const double a = shift_eta_lambda_form(data, k, sign);
  const double b = shift_eta_speed_form(data, k, sign);
  if (std::abs(a - b) > 1e-10 * (1.0 + std::abs(a))) {
    throw SolverError("shift_eta: lambda and speed forms disagree");
  }
  return a;
}

inline cd phase_A(const ScatteringData& data, std::size_t k, TimeSign sign) {
  detail::check_index(data, k);
  double angle = 0.0;
  detail::for_partners(data, k, sign,
                       [&](std::size_t j) { angle += theta_of_speed(speed_of_lambda(data.lambda(j))); });
  return std::polar(1.0, 2.0 * angle);
}

struct ShiftReport {
  std::size_t k = 1;
  TimeSign sign = TimeSign::Minus;
  double eta = 0.0;
  cd phase{1.0, 0.0};
  double theta = 0.0;  // theta_k of this soliton
};

inline std::vector<ShiftReport> shift_table(const ScatteringData& data) {
  std::vector<ShiftReport> rows;
  for (std::size_t k = 1; k <= data.size(); ++k) {
    for (TimeSign s : {TimeSign::Minus, TimeSign::Plus}) {
      rows.push_back({k, s, shift_eta(data, k, s), phase_A(data, k, s),
                      theta_of_speed(speed_of_lambda(data.lambda(k - 1)))});
    }
  }
  return rows;
}

/// Determinant by cofactor expansion along the first row. Exponential cost;
/// intended as an oracle for n <= 8.
inline cd laplace_determinant(const Eigen::MatrixXcd& m) {
  const Eigen::Index n = m.rows();
  if (m.cols() != n) throw DomainError("determinant of a non-square matrix");
  if (n == 0) return 1.0;
  if (n == 1) return m(0, 0);
  if (n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  cd det{};
  Eigen::MatrixXcd minor(n - 1, n - 1);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 1; r < n; ++r) {
      for (Eigen::Index cc = 0, dst = 0; cc < n; ++cc) {
        if (cc != c) minor(r - 1, dst++) = m(r, cc);
      }
    }
    const double sign = (c % 2 == 0) ? 1.0 : -1.0;
    det += sign * m(0, c) * laplace_determinant(minor);
  }
  return det;
}

/// Cofactor (i, j) = (-1)^{i+j} det(minor without row i, column j).
inline cd cofactor(const Eigen::MatrixXcd& m, Eigen::Index i, Eigen::Index j) {
  const Eigen::Index n = m.rows();
  Eigen::MatrixXcd minor(n - 1, n - 1);
  for (Eigen::Index r = 0, dr = 0; r < n; ++r) {
    if (r == i) continue;
    for (Eigen::Index c = 0, dc = 0; c < n; ++c) {
      if (c != j) minor(dr, dc++) = m(r, c);
    }
    ++dr;
  }
  return ((i + j) % 2 == 0 ? 1.0 : -1.0) * laplace_determinant(minor);
}

struct CofactorCheck {
  cd lhs;
  cd rhs;
  double gap = 0.0;
  double relative_gap = 0.0;
};

/// det(M + X J) against det(M) + X * (sum of all cofactors of M + X J), J the all-ones matrix.
inline CofactorCheck cofactor_identity_check(const Eigen::MatrixXcd& m, cd x) {
  const Eigen::Index n = m.rows();
  if (m.cols() != n) throw DomainError("cofactor check needs a square matrix");
  if (n < 1 || n > 8) throw DomainError("cofactor check supports sizes 1..8");
  const Eigen::MatrixXcd k = m + x * Eigen::MatrixXcd::Ones(n, n);
  CofactorCheck out;
  out.lhs = k.partialPivLu().determinant();
  const cd det_m = m.partialPivLu().determinant();
  cd cof_sum{};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) cof_sum += cofactor(k, i, j);
  }
  out.rhs = det_m + x * cof_sum;
  out.gap = std::abs(out.lhs - out.rhs);
  const double scale = std::max({std::abs(out.lhs), std::abs(det_m), std::abs(x * cof_sum), 1e-300});
  out.relative_gap = out.gap / scale;
  return out;
}

/// Max over eta of |u_N(s, eta + 2 lambda_k s) - A_k U_k(eta - eta_k)|, s = -T or +T,
/// one entry per T.
inline std::vector<double> empirical_limit(const ScatteringData& data, std::size_t k, TimeSign sign,
                                           const std::vector<double>& times,
                                           const std::vector<double>& etas) {
  detail::check_index(data, k);
  const double lam = data.lambda(k - 1), mu0 = data.mu0(k - 1);
  const double shift = shift_eta(data, k, sign);
  const cd phase = phase_A(data, k, sign);
  std::vector<double> out;
  out.reserve(times.size());
  for (double big_t : times) {
    if (!(big_t > 0.0)) throw DomainError("empirical_limit: times must be positive");
    const double s = sign == TimeSign::Minus ? -big_t : big_t;
    double dev = 0.0;
    for (double eta : etas) {
      const cd lhs = u_N(data, s, eta + 2.0 * lam * s);
      const cd rhs = phase * one_soliton(lam, mu0, 0.0, eta - shift);
      dev = std::max(dev, std::abs(lhs - rhs));
    }
    out.push_back(dev);
  }
  return out;
}

/// Location of the interior minimum of |u| refined by a parabola through
/// the three samples around the discrete minimum.
inline double soliton_center(const Axis& x, const std::vector<cd>& u) {
  if (u.size() != x.count || u.size() < 3) throw DomainError("soliton_center: need >= 3 matching samples");
  std::size_t best = 0;
  for (std::size_t i = 1; i < u.size(); ++i) {
    if (std::abs(u[i]) < std::abs(u[best])) best = i;
  }
  if (best == 0 || best + 1 == u.size()) throw SolverError("soliton_center: no interior minimum of |u|");
  const double ym = std::norm(u[best - 1]), y0 = std::norm(u[best]), yp = std::norm(u[best + 1]);
  const double curv = ym - 2.0 * y0 + yp;
  const double offset = curv > 0.0 ? 0.5 * (ym - yp) / curv : 0.0;
  return x.at(best) + offset * x.step;
}

inline double soliton_center(const Axis& x, const std::function<cd(double)>& field) {
  std::vector<cd> u(x.count);
  for (std::size_t i = 0; i < x.count; ++i) u[i] = field(x.at(i));
  return soliton_center(x, u);
}

}  // namespace gpm
