#pragma once

// Scattering data for the defocusing Gross-Pitaevskii equation
//   i u_t + u_xx + (1 - |u|^2) u = 0,   |u| -> 1 as |x| -> infinity.
//
// Discrete spectrum: points -1/sqrt2 < lambda_1 < ... < lambda_N < 1/sqrt2
// with strictly negative norming constants mu_k^0. Continuous spectrum: a
// real reflection coefficient c(lambda) on |lambda| >= 1/sqrt2.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "gpm/errors.hpp"

namespace gpm {

inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
inline constexpr double kPi = std::numbers::pi;

/// nu = sqrt(1/2 - lambda^2), the decay rate attached to a discrete point.
inline double nu_of_lambda(double lambda) {
  if (!(std::abs(lambda) < kInvSqrt2)) {
    throw DomainError("nu_of_lambda: |lambda| must be < 1/sqrt(2)");
  }
  return std::sqrt(0.5 - lambda * lambda);
}

/// Isospectral flow of a norming constant: mu(t) = mu0 exp(4 lambda nu t).
inline double evolve_mu(double mu0, double lambda, double t) {
  if (!(mu0 < 0.0)) throw DomainError("evolve_mu: mu0 must be negative");
  return mu0 * std::exp(4.0 * lambda * nu_of_lambda(lambda) * t);
}

/// Soliton speed carried by a discrete point: c = 2 lambda.
inline double speed_of_lambda(double lambda) {
  nu_of_lambda(lambda);  // domain check
  return 2.0 * lambda;
}

/// Collision angle theta = arccos(c / sqrt2), in (0, pi).
inline double theta_of_speed(double c) {
  if (!(std::abs(c) < kSqrt2)) {
    throw DomainError("theta_of_speed: |c| must be < sqrt(2)");
  }
  return std::acos(c / kSqrt2);
}

/// Traveling-wave parameters (speed, translation, phase).
class SolitonParams {
 public:
  SolitonParams(double speed, double position = 0.0, double phase = 0.0)
      : speed_(speed), position_(position), phase_(phase) {
    if (!(std::abs(speed) < kSqrt2)) {
      throw DomainError("SolitonParams: |c| must be < sqrt(2)");
    }
  }
  double speed() const { return speed_; }
  double position() const { return position_; }
  double phase() const { return phase_; }

 private:
  double speed_;
  double position_;
  double phase_;
};

/// Validated discrete scattering data. Immutable once built.
class ScatteringData {
 public:
  static constexpr double kDefaultGuard = 1e-6;

  ScatteringData() = default;

  /// Checks every admissibility condition and rejects violations; the input
  /// is never reordered.
  static ScatteringData validate(std::vector<double> lambdas,
                                 std::vector<double> mus0,
                                 double guard_delta = kDefaultGuard) {
    if (lambdas.size() != mus0.size()) {
      throw DomainError("scattering data: lambdas and mus0 differ in length");
    }
    if (!(guard_delta >= 0.0) || guard_delta >= kInvSqrt2) {
      throw DomainError("scattering data: guard_delta must lie in [0, 1/sqrt2)");
    }
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      const double l = lambdas[k];
      if (!std::isfinite(l) || !(std::abs(l) < kInvSqrt2)) {
        throw DomainError(describe("lambda", k, l,
                                   "outside the open interval (-1/sqrt2, 1/sqrt2)"));
      }
      if (std::abs(l) > kInvSqrt2 - guard_delta) {
        throw DomainError(describe("lambda", k, l,
                                   "inside the guard band around |lambda| = 1/sqrt2"));
      }
      if (k > 0 && !(lambdas[k - 1] < l)) {
        throw DomainError(describe("lambda", k, l,
                                   "not strictly increasing (unsorted or duplicate)"));
      }
      if (!std::isfinite(mus0[k]) || !(mus0[k] < 0.0)) {
        throw DomainError(describe("mu0", k, mus0[k], "must be strictly negative"));
      }
    }
    ScatteringData out;
    out.lambdas_ = std::move(lambdas);
    out.mus0_ = std::move(mus0);
    out.nus_.reserve(out.lambdas_.size());
    for (double l : out.lambdas_) out.nus_.push_back(nu_of_lambda(l));
    out.guard_ = guard_delta;
    return out;
  }

  std::size_t size() const { return lambdas_.size(); }
  bool empty() const { return lambdas_.empty(); }

  std::span<const double> lambdas() const { return lambdas_; }
  std::span<const double> mus0() const { return mus0_; }
  std::span<const double> nus() const { return nus_; }

  double lambda(std::size_t k) const { return lambdas_.at(k); }
  double mu0(std::size_t k) const { return mus0_.at(k); }
  double nu(std::size_t k) const { return nus_.at(k); }
  double guard_delta() const { return guard_; }

  /// mu_k(t) for zero-based k.
  double mu(std::size_t k, double t) const {
    return mus0_.at(k) * std::exp(4.0 * lambdas_[k] * nus_[k] * t);
  }

  double nu_min() const {
    return nus_.empty() ? std::numeric_limits<double>::infinity()
                        : *std::min_element(nus_.begin(), nus_.end());
  }

  /// Required before comparing a perturbed field to u_N at spatial infinity.
  bool nus_pairwise_distinct(double tol = 1e-12) const {
    for (std::size_t i = 0; i < nus_.size(); ++i)
      for (std::size_t j = i + 1; j < nus_.size(); ++j)
        if (std::abs(nus_[i] - nus_[j]) <= tol) return false;
    return true;
  }

 private:
  static std::string describe(const char* what, std::size_t k, double v,
                              const char* why) {
    std::ostringstream os;
    os << "scattering data: " << what << "[" << k << "] = " << v << " " << why;
    return os.str();
  }

  std::vector<double> lambdas_;
  std::vector<double> mus0_;
  std::vector<double> nus_;
  double guard_ = kDefaultGuard;
};

/// spectral parameter on the continuous spectrum: lambda(xi) = sqrt(xi^2 + 1/2).
inline double lambda_of_xi(double xi) { return std::sqrt(xi * xi + 0.5); }

enum class ReflectionFamily { None, Gaussian, Table };

/// Real reflection coefficient c(lambda) on both branches of the continuous
/// spectrum. plus(l) is c(l) and minus(l) is c(-l), both for l >= 1/sqrt2.
class ReflectionCoefficient {
 public:
  struct Sample {
    double lambda;  // >= 1/sqrt2
    double plus;    // c(lambda)
    double minus;   // c(-lambda)
  };

  ReflectionCoefficient() = default;

  static ReflectionCoefficient none() { return {}; }

  /// c(+-lambda(xi)) = amplitude * exp(-(xi/width)^2) on both branches.
  static ReflectionCoefficient gaussian(double amplitude, double width = 1.0,
                                        int decay_index = 3) {
    if (!std::isfinite(amplitude)) throw DomainError("gaussian reflection: bad amplitude");
    if (!(width > 0.0)) throw DomainError("gaussian reflection: width must be positive");
    ReflectionCoefficient r;
    r.family_ = ReflectionFamily::Gaussian;
    r.amplitude_ = amplitude;
    r.width_ = width;
    r.decay_index_ = check_decay_index(decay_index);
    r.check_weighted_bound();
    return r;
  }

  /// Piecewise-linear table in lambda, zero outside the sampled range.
  static ReflectionCoefficient table(std::vector<Sample> samples, int decay_index = 3) {
    if (samples.size() < 2) throw DomainError("table reflection: need >= 2 samples");
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      if (!std::isfinite(s.lambda) || !std::isfinite(s.plus) || !std::isfinite(s.minus)) {
        throw DomainError("table reflection: non-finite sample");
      }
      if (s.lambda < kInvSqrt2 - 1e-15) {
        throw DomainError("table reflection: sample lambda below 1/sqrt2");
      }
      if (i > 0 && !(samples[i - 1].lambda < s.lambda)) {
        throw DomainError("table reflection: lambdas must be strictly increasing");
      }
    }
    ReflectionCoefficient r;
    r.family_ = ReflectionFamily::Table;
    r.samples_ = std::move(samples);
    double amp = 0.0;
    for (const auto& s : r.samples_) amp = std::max({amp, std::abs(s.plus), std::abs(s.minus)});
    r.amplitude_ = amp;
    r.decay_index_ = check_decay_index(decay_index);
    r.check_weighted_bound();
    return r;
  }

  ReflectionFamily family() const { return family_; }
  bool is_zero() const { return family_ == ReflectionFamily::None || amplitude_ == 0.0; }
  double amplitude() const { return amplitude_; }
  double width() const { return width_; }
  int decay_index() const { return decay_index_; }
  std::span<const Sample> samples() const { return samples_; }

  /// c(lambda) for lambda >= 1/sqrt2.
  double plus(double lambda) const { return branch(lambda, true); }
  /// c(-lambda) for lambda >= 1/sqrt2.
  double minus(double lambda) const { return branch(lambda, false); }

  /// c at a signed spectral point |lambda| >= 1/sqrt2.
  double operator()(double lambda) const {
    return lambda >= 0.0 ? plus(lambda) : minus(-lambda);
  }

  /// sup over both branches of |lambda^k c(lambda)|, sampled in xi.
  double weighted_sup(int k) const {
    if (is_zero()) return 0.0;
    double sup = 0.0;
    const double xi_max = xi_cutoff(1e-300);
    const int n = 4000;
    for (int i = 0; i <= n; ++i) {
      const double xi = xi_max * i / n;
      const double l = lambda_of_xi(xi);
      const double w = std::pow(l, k);
      sup = std::max({sup, w * std::abs(plus(l)), w * std::abs(minus(l))});
    }
    if (family_ == ReflectionFamily::Table) {
      for (const auto& s : samples_) {
        const double w = std::pow(s.lambda, k);
        sup = std::max({sup, w * std::abs(s.plus), w * std::abs(s.minus)});
      }
    }
    return sup;
  }

  /// Smallest Xi such that the spectral integrand (including up to three
  /// powers of xi) beyond |xi| > Xi is bounded by tol in L1. Table data have
  /// compact support and return its edge exactly.
  double xi_cutoff(double tol) const {
    switch (family_) {
      case ReflectionFamily::None:
        return 0.0;
      case ReflectionFamily::Table: {
        const double l = samples_.back().lambda;
        return std::sqrt(std::max(0.0, l * l - 0.5));
      }
      case ReflectionFamily::Gaussian: {
        if (amplitude_ == 0.0) return 0.0;
        // integral_{Xi}^inf xi^3 a e^{-xi^2/w^2} <= a w^2 (Xi^2 + w^2) e^{-Xi^2/w^2} / 2
        double xi = width_;
        while (gaussian_tail(xi) > tol) xi += 0.05 * width_;
        return xi;
      }
    }
    return 0.0;
  }

  /// L1 tail estimate matching xi_cutoff.
  double tail_bound(double xi) const {
    switch (family_) {
      case ReflectionFamily::Gaussian:
        return gaussian_tail(xi);
      case ReflectionFamily::Table:
      case ReflectionFamily::None:
        return 0.0;
    }
    return 0.0;
  }

  /// Polynomial-decay cutoff: M Xi^{-(n+1)}/(n+1) < tol with
  /// M = sup |lambda^{n+2} c|.
  double polynomial_cutoff(double tol) const {
    const int n = decay_index_;
    const double m = weighted_sup(n + 2);
    if (m == 0.0) return 0.0;
    return std::pow(m / (tol * (n + 1)), 1.0 / (n + 1));
  }

 private:
  static int check_decay_index(int n) {
    if (n < 3) throw DomainError("reflection: decay index must be >= 3");
    return n;
  }

  void check_weighted_bound() const {
    const double s = weighted_sup(decay_index_ + 2);
    if (!std::isfinite(s)) {
      throw DomainError("reflection: lambda^{n+2} c(lambda) is not bounded on samples");
    }
  }

  double gaussian_tail(double xi) const {
    const double w2 = width_ * width_;
    return std::abs(amplitude_) * w2 * (xi * xi + w2) * std::exp(-xi * xi / w2);
  }

  double branch(double lambda, bool plus_branch) const {
    switch (family_) {
      case ReflectionFamily::None:
        return 0.0;
      case ReflectionFamily::Gaussian: {
        const double xi2 = std::max(0.0, lambda * lambda - 0.5);
        return amplitude_ * std::exp(-xi2 / (width_ * width_));
      }
      case ReflectionFamily::Table: {
        if (lambda < samples_.front().lambda || lambda > samples_.back().lambda) return 0.0;
        auto it = std::upper_bound(samples_.begin(), samples_.end(), lambda,
                                   [](double v, const Sample& s) { return v < s.lambda; });
        if (it == samples_.end()) {
          const auto& s = samples_.back();
          return plus_branch ? s.plus : s.minus;
        }
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        const double w = (lambda - lo.lambda) / (hi.lambda - lo.lambda);
        const double a = plus_branch ? lo.plus : lo.minus;
        const double b = plus_branch ? hi.plus : hi.minus;
        return a + w * (b - a);
      }
    }
    return 0.0;
  }

  ReflectionFamily family_ = ReflectionFamily::None;
  double amplitude_ = 0.0;
  double width_ = 1.0;
  int decay_index_ = 3;
  std::vector<Sample> samples_;
};

}  // namespace gpm
