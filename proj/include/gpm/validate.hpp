#pragma once

// Independent checks of constructed fields:
//   * finite-difference residual of  i u_t + u_xx + (1 - |u|^2) u = 0,
//   * the spatial Zakharov-Shabat system  i M psi' + Q psi - lambda psi = 0,
//     M = diag(1, -1), Q = [[0, conj q], [q, 0]], q = u / sqrt2,
//   * a Crank-Nicolson integrator driven by exact Dirichlet data.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "gpm/errors.hpp"
#include "gpm/field_grid.hpp"
#include "gpm/kernels.hpp"
#include "gpm/marchenko.hpp"
#include "gpm/nsoliton.hpp"
#include "gpm/parallel.hpp"
#include "gpm/scattering.hpp"

namespace gpm {

struct ResidualReport {
  double h = 0.0;
  double tau = 0.0;
  FieldGrid residual;  // interior nodes only
  double linf = 0.0;
  double l2 = 0.0;     // sqrt(h tau sum |R|^2)
};

/// Centered second-order residual on interior nodes.
inline ResidualReport gp_residual(const FieldGrid& field) {
  const Axis& ta = field.t_axis();
  const Axis& xa = field.x_axis();
  if (ta.count < 3 || xa.count < 3) throw DomainError("gp_residual: need >= 3 points per axis");
  const double h = xa.step, tau = ta.step;
  ResidualReport rep{h, tau,
                     FieldGrid(Axis{ta.at(1), tau, ta.count - 2}, Axis{xa.at(1), h, xa.count - 2},
                               field.provenance()),
                     0.0, 0.0};
  double sum = 0.0;
  for (std::size_t i = 1; i + 1 < ta.count; ++i) {
    for (std::size_t j = 1; j + 1 < xa.count; ++j) {
      const cd u = field(i, j);
      const cd ut = (field(i + 1, j) - field(i - 1, j)) / (2.0 * tau);
      const cd uxx = (field(i, j + 1) - 2.0 * u + field(i, j - 1)) / (h * h);
      const cd r = kI * ut + uxx + (1.0 - std::norm(u)) * u;
      rep.residual(i - 1, j - 1) = r;
      rep.linf = std::max(rep.linf, std::abs(r));
      sum += std::norm(r);
    }
  }
  rep.l2 = std::sqrt(h * tau * sum);
  return rep;
}

/// Observed orders log2(e_k / e_{k+1}) for a sequence of halved resolutions.
inline std::vector<double> observed_orders(const std::vector<double>& errors) {
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) out.push_back(std::log2(errors[k] / errors[k + 1]));
  return out;
}

struct ResidualStudy {
  std::vector<ResidualReport> reports;
  std::vector<double> orders;  // from L-infinity norms
};

inline ResidualStudy gp_residual_study(const std::vector<FieldGrid>& fields) {
  ResidualStudy s;
  std::vector<double> linf;
  for (const auto& f : fields) {
    s.reports.push_back(gp_residual(f));
    linf.push_back(s.reports.back().linf);
  }
  s.orders = observed_orders(linf);
  return s;
}

/// lambda = sqrt(xi^2 + 1/2) on the principal branch (positive on the real axis).
inline cd lambda_of_xi(cd xi) { return std::sqrt(xi * xi + 0.5); }

/// Free solution X(x) = e^{-i xi x} (1, sqrt2 (lambda - xi)).
inline Eigen::Vector2cd zs_free_solution(cd xi, cd lambda, double x) {
  const cd e = std::exp(-kI * xi * x);
  return {e, e * kSqrt2 * (lambda - xi)};
}

struct ZSState {
  cd xi;
  cd lambda;
  Axis x;
  std::vector<Eigen::Vector2cd> psi;
};

namespace detail {

/// psi = (I - int_0^inf Psi(x, p) e^{-i xi p} dp) X(x) for a kernel whose first
/// row has the given p-transforms (a, b); the second row is (conj-kernel transforms).
inline Eigen::Vector2cd zs_apply(const Eigen::Matrix2cd& transform, const Eigen::Vector2cd& free) {
  return free - transform * free;
}

}  // namespace detail

/// Jost-type solution from the Marchenko kernel. Reflectionless data use the
/// exponential sums in closed form; otherwise the perturbed kernel is solved at
/// each x and integrated with the trapezoid rule.
inline ZSState zs_eigenfunction(const ScatteringData& data, const ReflectionCoefficient& refl, double t,
                                const Axis& x, cd xi, const HalfLineGrid& grid = HalfLineGrid(40.0, 800),
                                const SolverOptions& opt = {}, const KernelTableOptions& kopt = {}) {
  if (!(xi.imag() < 0.0)) throw DomainError("zs_eigenfunction: need Im xi < 0 for a decaying integrand");
  ZSState st{xi, lambda_of_xi(xi), x, std::vector<Eigen::Vector2cd>(x.count)};
  if (std::abs(st.lambda * st.lambda - xi * xi - 0.5) > 1e-12 * (1.0 + std::norm(xi))) {
    throw SolverError("zs_eigenfunction: branch violates lambda^2 - xi^2 = 1/2");
  }
  if (refl.is_zero()) {
    parallel_for(x.count, [&](std::size_t j) {
      Eigen::Matrix2cd tr = Eigen::Matrix2cd::Zero();
      if (!data.empty()) {
        const NSolitonCoefficients c = solve_G(data, t, x.at(j));
        for (std::size_t k = 0; k < data.size(); ++k) {
          const cd d = 1.0 / (data.nu(k) + kI * xi);
          tr(0, 0) += c.f_tilde[k] * d;
          tr(0, 1) += c.g_tilde[k] * d;
          tr(1, 0) += std::conj(c.g_tilde[k]) * d;
          tr(1, 1) += std::conj(c.f_tilde[k]) * d;
        }
      }
      st.psi[j] = detail::zs_apply(tr, zs_free_solution(xi, st.lambda, x.at(j)));
    });
    return st;
  }
  SolverOptions o = opt;
  o.estimate_budget = false;
  const KernelTable table = operator_kernels(data, refl, t, x.start, x.back(), grid.length(), kopt);
  parallel_for(x.count, [&](std::size_t j) {
    const MarchenkoSolution s = fixed_point_solve(table, x.at(j), grid, o);
    const HalfLineField kernel = s.kernel();
    Eigen::Matrix2cd tr = Eigen::Matrix2cd::Zero();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const cd w = grid.weight(i) * std::exp(-kI * xi * grid.at(i));
      const cd a = kernel.first()[i], b = kernel.second()[i];
      tr(0, 0) += w * a;
      tr(0, 1) += w * b;
      tr(1, 0) += w * std::conj(b);
      tr(1, 1) += w * std::conj(a);
    }
    st.psi[j] = detail::zs_apply(tr, zs_free_solution(xi, st.lambda, x.at(j)));
  });
  return st;
}

/// max over interior x of |i M D psi + Q psi - lambda psi|, D the centered difference.
inline double lax_residual(const ZSState& st, const std::vector<cd>& u) {
  if (u.size() != st.x.count || st.psi.size() != st.x.count) {
    throw DomainError("lax_residual: field and eigenfunction grids differ");
  }
  if (st.x.count < 3) throw DomainError("lax_residual: need >= 3 samples");
  const double h = st.x.step;
  double worst = 0.0;
  for (std::size_t j = 1; j + 1 < u.size(); ++j) {
    const Eigen::Vector2cd d = (st.psi[j + 1] - st.psi[j - 1]) / (2.0 * h);
    const cd q = u[j] * kInvSqrt2;
    const Eigen::Vector2cd& p = st.psi[j];
    const cd r0 = kI * d(0) + std::conj(q) * p(1) - st.lambda * p(0);
    const cd r1 = -kI * d(1) + q * p(0) - st.lambda * p(1);
    worst = std::max({worst, std::abs(r0), std::abs(r1)});
  }
  return worst;
}

inline double lax_residual(const ZSState& st, const FieldGrid& field, std::size_t time_index) {
  if (!(field.x_axis() == st.x)) throw DomainError("lax_residual: x axes differ");
  return lax_residual(st, field.row(time_index));
}

struct CnOptions {
  double inner_tol = 1e-12;
  std::size_t max_inner = 30;
  std::size_t save_stride = 1;  // keep every k-th step
};

/// Crank-Nicolson for u_t = i (u_xx + (1 - |u|^2) u) on the nodes of x with
/// Dirichlet data at both ends. The nonlinearity uses the time average
/// (1 - (|u^n|^2 + |u^{n+1}|^2)/2) (u^n + u^{n+1})/2, solved by fixed point.
inline FieldGrid cn_evolve(const std::vector<cd>& initial, const Axis& x, double t0, double t1, double tau,
                           const std::function<cd(double)>& left, const std::function<cd(double)>& right,
                           const CnOptions& opt = {}) {
  if (initial.size() != x.count || x.count < 3) throw DomainError("cn_evolve: bad initial profile");
  if (!(tau > 0.0) || !(t1 > t0)) throw DomainError("cn_evolve: bad time interval");
  if (opt.save_stride == 0) throw DomainError("cn_evolve: save_stride must be >= 1");
  const double steps_real = (t1 - t0) / tau;
  const auto steps = static_cast<std::size_t>(std::llround(steps_real));
  if (std::abs(steps_real - static_cast<double>(steps)) > 1e-6 * steps_real) {
    throw DomainError("cn_evolve: tau does not divide the time interval");
  }
  const double bc_tol = 1e-8;
  if (std::abs(initial.front() - left(t0)) > bc_tol || std::abs(initial.back() - right(t0)) > bc_tol) {
    throw DomainError("cn_evolve: initial profile does not match boundary data");
  }
  if (steps % opt.save_stride != 0) throw DomainError("cn_evolve: save_stride must divide the step count");

  const std::size_t n = x.count, interior = n - 2;
  const double h = x.step;
  const cd off = -kI * tau / (2.0 * h * h);         // implicit side off-diagonal
  const cd diag = 1.0 + kI * tau / (h * h);
  // Thomas factorisation of the constant tridiagonal matrix.
  std::vector<cd> cprime(interior), denom(interior);
  for (std::size_t k = 0; k < interior; ++k) {
    denom[k] = diag - (k > 0 ? off * cprime[k - 1] : cd{});
    cprime[k] = off / denom[k];
  }

  FieldGrid out(Axis{t0, tau * static_cast<double>(opt.save_stride), steps / opt.save_stride + 1}, x,
                Provenance::CnEvolved);
  std::vector<cd> u = initial, next(n), guess(n), rhs(interior);
  for (std::size_t j = 0; j < n; ++j) out(0, j) = u[j];

  for (std::size_t step = 1; step <= steps; ++step) {
    const double t_new = t0 + static_cast<double>(step) * tau;
    guess = u;
    guess.front() = left(t_new);
    guess.back() = right(t_new);
    bool converged = false;
    for (std::size_t it = 0; it < opt.max_inner; ++it) {
      for (std::size_t k = 0; k < interior; ++k) {
        const std::size_t j = k + 1;
        const cd lap = (u[j + 1] - 2.0 * u[j] + u[j - 1]) / (h * h);
        const cd mid = 0.5 * (u[j] + guess[j]);
        const double dens = 0.5 * (std::norm(u[j]) + std::norm(guess[j]));
        rhs[k] = u[j] + kI * tau * (0.5 * lap + (1.0 - dens) * mid);
      }
      rhs.front() -= off * guess.front();
      rhs.back() -= off * guess.back();
      // forward/back substitution
      std::vector<cd>& y = rhs;
      y[0] /= denom[0];
      for (std::size_t k = 1; k < interior; ++k) y[k] = (y[k] - off * y[k - 1]) / denom[k];
      for (std::size_t k = interior - 1; k-- > 0;) y[k] -= cprime[k] * y[k + 1];
      next.front() = guess.front();
      next.back() = guess.back();
      double change = 0.0;
      for (std::size_t k = 0; k < interior; ++k) {
        next[k + 1] = y[k];
        const double dk = std::abs(y[k] - guess[k + 1]);
        // std::max would swallow a NaN update and report convergence
        change = std::isfinite(dk) ? std::max(change, dk) : std::numeric_limits<double>::infinity();
      }
      std::swap(guess, next);
      if (change <= opt.inner_tol) {
        converged = true;
        break;
      }
    }
    if (!converged) throw SolverError("cn_evolve: inner fixed point did not converge; reduce tau");
    std::swap(u, guess);
    if (step % opt.save_stride == 0) {
      const std::size_t row = step / opt.save_stride;
      for (std::size_t j = 0; j < n; ++j) out(row, j) = u[j];
    }
  }
  return out;
}

struct FieldGap {
  double linf = 0.0;
  double rms = 0.0;
};

inline FieldGap compare_fields(const FieldGrid& a, const FieldGrid& b) {
  if (!(a.t_axis() == b.t_axis()) || !(a.x_axis() == b.x_axis())) {
    throw DomainError("compare_fields: axes differ");
  }
  FieldGap g;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    const double d = std::abs(a.values()[i] - b.values()[i]);
    g.linf = std::max(g.linf, d);
    sum += d * d;
  }
  g.rms = a.values().empty() ? 0.0 : std::sqrt(sum / static_cast<double>(a.values().size()));
  return g;
}

}  // namespace gpm
