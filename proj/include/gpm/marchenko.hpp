#pragma once

// Perturbed Marchenko system on the shifted half-line p = y - x >= 0:
//   (2 sqrt2 + Omega_x) Psi_r = T_x (Psi_r + Upsilon) + F_x,
// where Upsilon is the reflectionless kernel, Omega_x the discrete part
// (finite rank, positive) and T_x the Hankel-type continuous part:
//   (Omega_x Phi)(p) = int_0^inf Omega(2x + p + s) Phi(s) ds
//                    = sum_k e^{-nu_k (2x + p)} A_k int_0^inf e^{-nu_k s} Phi(s) ds,
//   A_k = -mu_k(t) [[1, sqrt2 (lambda_k + i nu_k)], [sqrt2 (lambda_k - i nu_k), 1]],
//   (T_x Phi)(p)     = int_0^inf T^(2x + p + s) Phi(s) ds.
// Reconstruction: u = 1 + 2 sqrt2 i conj(Upsilon_2(0) + Psi_r2(0)).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpm/errors.hpp"
#include "gpm/field_grid.hpp"
#include "gpm/kernels.hpp"
#include "gpm/nsoliton.hpp"
#include "gpm/parallel.hpp"
#include "gpm/scattering.hpp"

namespace gpm {

inline constexpr double kCoercivity = 2.0 * kSqrt2;

/// Uniform trapezoid grid on [0, P] with M intervals.
class HalfLineGrid {
 public:
  HalfLineGrid(double length, std::size_t intervals) : length_(length), intervals_(intervals) {
    if (!(length > 0.0) || !std::isfinite(length)) throw DomainError("half-line grid: P must be positive");
    if (intervals < 2) throw DomainError("half-line grid: need at least 2 intervals");
  }

  /// Smallest P (rounded up to a multiple of step) with e^{-nu_min P} < tail.
  static HalfLineGrid for_data(const ScatteringData& data, double step, double tail = 1e-12,
                               double min_length = 20.0) {
    double length = min_length;
    if (!data.empty()) length = std::max(length, -std::log(tail) / data.nu_min());
    const auto m = static_cast<std::size_t>(std::ceil(length / step));
    return HalfLineGrid(static_cast<double>(m) * step, m);
  }

  double length() const { return length_; }
  std::size_t intervals() const { return intervals_; }
  std::size_t size() const { return intervals_ + 1; }
  double step() const { return length_ / static_cast<double>(intervals_); }
  double at(std::size_t i) const { return static_cast<double>(i) * step(); }
  double weight(std::size_t i) const {
    return (i == 0 || i == intervals_) ? 0.5 * step() : step();
  }

  friend bool operator==(const HalfLineGrid& a, const HalfLineGrid& b) {
    return a.length_ == b.length_ && a.intervals_ == b.intervals_;
  }

 private:
  double length_;
  std::size_t intervals_;
};

/// Two complex components sampled on a HalfLineGrid.
class HalfLineField {
 public:
  explicit HalfLineField(const HalfLineGrid& grid)
      : grid_(grid), first_(grid.size()), second_(grid.size()) {}

  const HalfLineGrid& grid() const { return grid_; }
  std::size_t size() const { return first_.size(); }

  std::vector<cd>& first() { return first_; }
  std::vector<cd>& second() { return second_; }
  const std::vector<cd>& first() const { return first_; }
  const std::vector<cd>& second() const { return second_; }

  Eigen::Vector2cd at(std::size_t i) const { return {first_[i], second_[i]}; }
  void set(std::size_t i, const Eigen::Vector2cd& v) {
    first_[i] = v(0);
    second_[i] = v(1);
  }

  bool all_finite() const {
    auto ok = [](const cd& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); };
    return std::all_of(first_.begin(), first_.end(), ok) &&
           std::all_of(second_.begin(), second_.end(), ok);
  }

  /// Trapezoid inner product sum w_i <a_i, b_i>, conjugate-linear in `other`.
  cd inner(const HalfLineField& other) const {
    check_same(other);
    cd s{};
    for (std::size_t i = 0; i < size(); ++i) {
      s += grid_.weight(i) * (first_[i] * std::conj(other.first_[i]) +
                              second_[i] * std::conj(other.second_[i]));
    }
    return s;
  }

  double norm_l2() const { return std::sqrt(std::max(0.0, inner(*this).real())); }

  double norm_h1() const {
    double s = inner(*this).real();
    const double dp = grid_.step();
    for (std::size_t i = 0; i + 1 < size(); ++i) {
      s += (std::norm(first_[i + 1] - first_[i]) + std::norm(second_[i + 1] - second_[i])) / dp;
    }
    return std::sqrt(std::max(0.0, s));
  }

  HalfLineField& operator+=(const HalfLineField& o) {
    check_same(o);
    for (std::size_t i = 0; i < size(); ++i) {
      first_[i] += o.first_[i];
      second_[i] += o.second_[i];
    }
    return *this;
  }
  HalfLineField& operator-=(const HalfLineField& o) {
    check_same(o);
    for (std::size_t i = 0; i < size(); ++i) {
      first_[i] -= o.first_[i];
      second_[i] -= o.second_[i];
    }
    return *this;
  }
  HalfLineField& operator*=(cd s) {
    for (std::size_t i = 0; i < size(); ++i) {
      first_[i] *= s;
      second_[i] *= s;
    }
    return *this;
  }
  friend HalfLineField operator+(HalfLineField a, const HalfLineField& b) { return a += b; }
  friend HalfLineField operator-(HalfLineField a, const HalfLineField& b) { return a -= b; }
  friend HalfLineField operator*(cd s, HalfLineField a) { return a *= s; }

  void check_same(const HalfLineField& o) const {
    if (!(grid_ == o.grid_)) throw DomainError("half-line fields live on different grids");
  }

 private:
  HalfLineGrid grid_;
  std::vector<cd> first_;
  std::vector<cd> second_;
};

/// Reflectionless kernel sampled on the half-line grid.
inline HalfLineField sample_upsilon(const ScatteringData& data, const NSolitonCoefficients& c,
                                    const HalfLineGrid& grid) {
  HalfLineField out(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) out.set(i, kernel_upsilon(data, c, grid.at(i)));
  return out;
}

/// Discretized operators at one (t, x): Omega_x, its coercive inverse and T_x.
class MarchenkoOperator {
 public:
  MarchenkoOperator(const KernelTable& table, double x, const HalfLineGrid& grid)
      : table_(&table), x_(x), grid_(grid) {
    const ScatteringData& data = table.data();
    const std::size_t n = data.size(), np = grid.size();
    if (!table.covers(2.0 * x) || !table.covers(2.0 * x + 2.0 * grid.length())) {
      throw DomainError("kernel table does not cover 2x + [0, 2P]");
    }
    decay_.assign(n, std::vector<double>(np));
    log_scale_.resize(n);
    amp_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double nu = data.nu(k), lam = data.lambda(k), mu = data.mu(k, table.t());
      for (std::size_t i = 0; i < np; ++i) decay_[k][i] = std::exp(-nu * grid.at(i));
      log_scale_[k] = -2.0 * nu * x;
      const cd b = kSqrt2 * cd(lam, nu);
      amp_[k] << -mu, -mu * b, -mu * std::conj(b), -mu;
    }
    if (table.has_continuous()) {
      t_hat_.resize(2 * grid.intervals() + 1);
      for (std::size_t k = 0; k < t_hat_.size(); ++k) {
        t_hat_[k] = table.t_hat(2.0 * x + static_cast<double>(k) * grid.step());
      }
      forcing_ = HalfLineField(grid);
      for (std::size_t i = 0; i < np; ++i) forcing_.set(i, table.forcing(2.0 * x + grid.at(i)));
    } else {
      forcing_ = HalfLineField(grid);
    }
    if (n > 0) factor_capacitance();
  }

  const HalfLineGrid& grid() const { return grid_; }
  double x() const { return x_; }
  const KernelTable& table() const { return *table_; }
  const HalfLineField& forcing() const { return forcing_; }
  std::size_t rank() const { return amp_.size(); }

  /// Weighted exponential moments int e^{-nu_k s} Phi(s) ds.
  std::vector<Eigen::Vector2cd> moments(const HalfLineField& phi) const {
    std::vector<Eigen::Vector2cd> m(rank(), Eigen::Vector2cd::Zero());
    for (std::size_t k = 0; k < rank(); ++k) {
      for (std::size_t i = 0; i < phi.size(); ++i) m[k] += grid_.weight(i) * decay_[k][i] * phi.at(i);
    }
    return m;
  }

  HalfLineField apply_omega(const HalfLineField& phi) const {
    check(phi);
    HalfLineField out(grid_);
    const auto m = moments(phi);
    for (std::size_t k = 0; k < rank(); ++k) {
      const Eigen::Vector2cd v = std::exp(log_scale_[k]) * (amp_[k] * m[k]);
      for (std::size_t i = 0; i < out.size(); ++i) out.set(i, out.at(i) + decay_[k][i] * v);
    }
    return out;
  }

  /// (2 sqrt2 + Omega_x)^{-1} rhs through the 2N x 2N capacitance system
  ///   alpha y_j + s_j A_j sum_k G_jk y_k = s_j A_j rho_j,
  /// y_k = s_k A_k m_k, s_k = e^{-2 nu_k x}, G_jk = <e^{-nu_j p}, e^{-nu_k p}>, rho the
  /// moments of rhs; then Theta = (rhs - sum_k e^{-nu_k p} y_k) / alpha.
  HalfLineField invert(const HalfLineField& rhs) const {
    check(rhs);
    HalfLineField out = (1.0 / kCoercivity) * rhs;
    if (rank() == 0) return out;
    const auto rho = moments(rhs);
    Eigen::VectorXcd b(2 * rank());
    for (std::size_t j = 0; j < rank(); ++j) {
      b.segment<2>(2 * j) = row_factor(j) * (amp_[j] * rho[j]);
    }
    const Eigen::VectorXcd y = capacitance_.solve(b);
    if (!y.allFinite()) throw SolverError("capacitance solve produced non-finite values");
    for (std::size_t k = 0; k < rank(); ++k) {
      const Eigen::Vector2cd yk = y.segment<2>(2 * k) / kCoercivity;
      for (std::size_t i = 0; i < out.size(); ++i) out.set(i, out.at(i) - decay_[k][i] * yk);
    }
    return out;
  }

  /// Dense Nystrom matrix of 2 sqrt2 + Omega_x on the grid (oracle path).
  Eigen::MatrixXcd dense_matrix() const {
    const std::size_t np = grid_.size();
    Eigen::MatrixXcd a = kCoercivity * Eigen::MatrixXcd::Identity(2 * np, 2 * np);
    for (std::size_t k = 0; k < rank(); ++k) {
      const double s = std::exp(log_scale_[k]);
      for (std::size_t i = 0; i < np; ++i) {
        for (std::size_t j = 0; j < np; ++j) {
          a.block<2, 2>(2 * i, 2 * j) += (s * decay_[k][i] * decay_[k][j] * grid_.weight(j)) * amp_[k];
        }
      }
    }
    return a;
  }

  HalfLineField invert_dense(const HalfLineField& rhs) const {
    check(rhs);
    const std::size_t np = grid_.size();
    Eigen::VectorXcd b(2 * np);
    for (std::size_t i = 0; i < np; ++i) b.segment<2>(2 * i) = rhs.at(i);
    const Eigen::VectorXcd sol = dense_matrix().partialPivLu().solve(b);
    HalfLineField out(grid_);
    for (std::size_t i = 0; i < np; ++i) out.set(i, sol.segment<2>(2 * i));
    return out;
  }

  /// Hankel product (T_x Phi)_i = sum_j w_j T^(2x + p_i + p_j) Phi_j.
  HalfLineField apply_t(const HalfLineField& phi) const {
    check(phi);
    HalfLineField out(grid_);
    if (t_hat_.empty()) return out;
    const std::size_t np = grid_.size();
    std::vector<Eigen::Vector2cd> wphi(np);
    for (std::size_t j = 0; j < np; ++j) wphi[j] = grid_.weight(j) * phi.at(j);
    for (std::size_t i = 0; i < np; ++i) {
      Eigen::Vector2cd acc = Eigen::Vector2cd::Zero();
      for (std::size_t j = 0; j < np; ++j) acc.noalias() += t_hat_[i + j] * wphi[j];
      out.set(i, acc);
    }
    return out;
  }

 private:
  // Block row j is divided by s_j when s_j > 1 so huge exponentials stay finite.
  double row_factor(std::size_t j) const { return std::exp(std::min(log_scale_[j], 0.0)); }

  void factor_capacitance() {
    const std::size_t n = rank();
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    for (std::size_t j = 0; j < n; ++j) {
      const double rf = row_factor(j);
      // alpha / max(1, s_j) on the diagonal; s_j / max(1, s_j) = min(1, s_j) in front of A_j.
      const double diag = kCoercivity * std::exp(-std::max(log_scale_[j], 0.0));
      c.block<2, 2>(2 * j, 2 * j) += diag * Eigen::Matrix2cd::Identity();
      for (std::size_t k = 0; k < n; ++k) {
        double gram = 0.0;
        for (std::size_t i = 0; i < grid_.size(); ++i) gram += grid_.weight(i) * decay_[j][i] * decay_[k][i];
        c.block<2, 2>(2 * j, 2 * k) += (rf * gram) * amp_[j];
      }
    }
    capacitance_ = c.fullPivLu();
    if (capacitance_.rank() < static_cast<Eigen::Index>(2 * n)) {
      throw SolverError("capacitance system is singular: quadrature breakdown");
    }
  }

  void check(const HalfLineField& f) const {
    if (!(f.grid() == grid_)) throw DomainError("field grid does not match operator grid");
  }

  const KernelTable* table_;
  double x_;
  HalfLineGrid grid_;
  std::vector<std::vector<double>> decay_;  // e^{-nu_k p_i}
  std::vector<double> log_scale_;           // log s_k = -2 nu_k x
  std::vector<Eigen::Matrix2cd> amp_;       // A_k
  std::vector<Eigen::Matrix2cd> t_hat_;     // T^(2x + k dp), k = 0..2M
  HalfLineField forcing_{HalfLineGrid(1.0, 2)};
  Eigen::FullPivLU<Eigen::MatrixXcd> capacitance_;
};

inline HalfLineField apply_Omega(const KernelTable& table, double x, const HalfLineField& phi) {
  return MarchenkoOperator(table, x, phi.grid()).apply_omega(phi);
}

inline HalfLineField invert_coercive(const KernelTable& table, double x, const HalfLineField& rhs,
                                     bool dense = false) {
  const MarchenkoOperator op(table, x, rhs.grid());
  return dense ? op.invert_dense(rhs) : op.invert(rhs);
}

inline HalfLineField apply_T(const KernelTable& table, double x, const HalfLineField& phi) {
  return MarchenkoOperator(table, x, phi.grid()).apply_t(phi);
}

struct SolverOptions {
  double tol = 1e-12;
  std::size_t max_iter = 200;
  bool estimate_budget = true;  // extra solve at half resolution (needs even M)
};

struct SolveDiagnostics {
  std::size_t iterations = 0;
  double update_norm = 0.0;
  double contraction_ratio = 0.0;  // largest measured ||d_{m+1}|| / ||d_m||
  double residual = 0.0;           // L2 back-substitution residual of the discrete system
  double error_budget = 0.0;       // Richardson + kernel + half-line truncation estimate
  double kernel_error = 0.0;
  double truncation_error = 0.0;
  double richardson_error = 0.0;

  nlohmann::json to_json() const {
    return {{"iterations", iterations},   {"update_norm", update_norm},
            {"ratio", contraction_ratio}, {"residual", residual},
            {"budget", error_budget}};
  }
};

struct MarchenkoSolution {
  HalfLineField remainder;  // Psi_r
  HalfLineField upsilon;    // reflectionless part
  SolveDiagnostics diagnostics;
  cd u{1.0, 0.0};
  cd u_n{1.0, 0.0};

  /// Full kernel Psi = Upsilon + Psi_r (first row of the 2x2 kernel).
  HalfLineField kernel() const { return upsilon + remainder; }
};

namespace detail {

/// Fixed-point iteration only; no budget estimate.
inline MarchenkoSolution iterate(const KernelTable& table, double x, const HalfLineGrid& grid,
                                 const SolverOptions& opt) {
  const ScatteringData& data = table.data();
  const MarchenkoOperator op(table, x, grid);
  MarchenkoSolution sol{HalfLineField(grid), HalfLineField(grid), {}, {1.0, 0.0}, {1.0, 0.0}};
  if (!data.empty()) {
    const NSolitonCoefficients coeffs = solve_G(data, table.t(), x);
    sol.upsilon = sample_upsilon(data, coeffs, grid);
    sol.u_n = u_from_coefficients(coeffs);
  }
  SolveDiagnostics& d = sol.diagnostics;
  const HalfLineField source = op.apply_t(sol.upsilon) + op.forcing();
  const HalfLineField base = op.invert(source);  // iterate from zero: first step
  HalfLineField psi(grid);
  double prev_update = -1.0;
  int growing = 0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t m = 0; m < opt.max_iter; ++m) {
    HalfLineField next = base;
    if (table.has_continuous() && m > 0) next += op.invert(op.apply_t(psi));
    if (!next.all_finite()) throw SolverError("fixed-point iterate became non-finite");
    const double update = (next - psi).norm_l2();
    psi = std::move(next);
    d.iterations = m + 1;
    d.update_norm = update;
    const double floor = 64.0 * eps * (psi.norm_l2() + base.norm_l2());
    if (prev_update > floor && update > floor) {
      const double ratio = update / prev_update;
      d.contraction_ratio = std::max(d.contraction_ratio, ratio);
      growing = ratio >= 1.0 ? growing + 1 : 0;
      if (growing >= 3) {
        throw DivergenceError("fixed-point iteration diverges: measured contraction ratio " +
                                  std::to_string(ratio) + " >= 1 for 3 consecutive steps",
                              ratio);
      }
    }
    prev_update = update;
    if (update <= opt.tol) break;
    if (m + 1 == opt.max_iter) throw SolverError("fixed-point iteration hit max_iter");
  }
  const HalfLineField lhs = kCoercivity * psi + op.apply_omega(psi);
  const HalfLineField rhs = op.apply_t(psi + sol.upsilon) + op.forcing();
  d.residual = (lhs - rhs).norm_l2();
  sol.remainder = std::move(psi);
  sol.u = 1.0 + 2.0 * kSqrt2 * kI * std::conj(sol.upsilon.second()[0] + sol.remainder.second()[0]);
  return sol;
}

}  // namespace detail

/// Solves for Psi_r at (table.t(), x) starting from zero.
inline MarchenkoSolution fixed_point_solve(const KernelTable& table, double x, const HalfLineGrid& grid,
                                           const SolverOptions& opt = {}) {
  MarchenkoSolution sol = detail::iterate(table, x, grid, opt);
  SolveDiagnostics& d = sol.diagnostics;
  const ScatteringData& data = table.data();
  if (!table.has_continuous()) return sol;  // exact: Psi_r = 0
  const double ratio = std::min(d.contraction_ratio, 0.99);
  const double kernel_scale =
      1.0 + grid.length() * std::max(1.0, sol.kernel().norm_l2() / std::sqrt(grid.length()));
  d.kernel_error = table.error_budget() * kernel_scale / (kCoercivity * (1.0 - ratio));
  d.truncation_error = data.empty() ? 0.0 : std::exp(-data.nu_min() * grid.length());
  if (opt.estimate_budget && grid.intervals() % 2 == 0) {
    const HalfLineGrid coarse(grid.length(), grid.intervals() / 2);
    SolverOptions o = opt;
    o.estimate_budget = false;
    const MarchenkoSolution c = detail::iterate(table, x, coarse, o);
    d.richardson_error = std::abs(sol.u - c.u) / 3.0;
  }
  d.error_budget = d.kernel_error + d.truncation_error + d.richardson_error;
  return sol;
}

/// Builds the kernel table for a single point and solves.
inline MarchenkoSolution fixed_point_solve(const ScatteringData& data, const ReflectionCoefficient& refl,
                                           double t, double x, const HalfLineGrid& grid,
                                           const SolverOptions& opt = {},
                                           const KernelTableOptions& kopt = {}) {
  const KernelTable table = operator_kernels(data, refl, t, x, x, grid.length(), kopt);
  return fixed_point_solve(table, x, grid, opt);
}

inline cd reconstruct_u(const ScatteringData& data, const ReflectionCoefficient& refl, double t,
                        double x, const HalfLineGrid& grid, const SolverOptions& opt = {}) {
  SolverOptions o = opt;
  o.estimate_budget = false;
  return fixed_point_solve(data, refl, t, x, grid, o).u;
}

/// |u(t,x) - u_N(t,x)|.
inline double far_field_gap(const ScatteringData& data, const ReflectionCoefficient& refl, double t,
                            double x, const HalfLineGrid& grid, const SolverOptions& opt = {}) {
  if (!data.empty() && !data.nus_pairwise_distinct()) {
    throw DomainError("far_field_gap: nu_k must be pairwise distinct");
  }
  SolverOptions o = opt;
  o.estimate_budget = false;
  const MarchenkoSolution s = fixed_point_solve(data, refl, t, x, grid, o);
  return std::abs(s.u - s.u_n);
}

struct PerturbedField {
  FieldGrid field;
  std::vector<SolveDiagnostics> diagnostics;  // row-major like field values

  nlohmann::json diagnostics_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& d : diagnostics) arr.push_back(d.to_json());
    return arr;
  }
};

/// Perturbed u on every grid node: one kernel table per time row, points in parallel.
inline PerturbedField perturbed_grid_eval(const ScatteringData& data, const ReflectionCoefficient& refl,
                                          const GridSpec& spec, const HalfLineGrid& grid,
                                          const SolverOptions& opt = {},
                                          const KernelTableOptions& kopt = {}) {
  PerturbedField out{FieldGrid(spec.t_axis(), spec.x_axis(), Provenance::Perturbed), {}};
  const Axis ta = out.field.t_axis(), xa = out.field.x_axis();
  out.diagnostics.resize(ta.count * xa.count);
  for (std::size_t i = 0; i < ta.count; ++i) {
    const KernelTable table = operator_kernels(data, refl, ta.at(i), xa.start, xa.back(), grid.length(), kopt);
    parallel_for(xa.count, [&](std::size_t j) {
      const MarchenkoSolution s = fixed_point_solve(table, xa.at(j), grid, opt);
      out.field(i, j) = s.u;
      out.diagnostics[i * xa.count + j] = s.diagnostics;
    });
  }
  return out;
}

}  // namespace gpm
