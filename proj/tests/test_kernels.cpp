#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "gpm/kernels.hpp"

using namespace gpm;

TEST(Spectral, C1C2Examples) {
  const auto [z1, z2] = c1_c2(ReflectionCoefficient::none(), 0.3, 1.0);
  EXPECT_EQ(z1, cd{});
  EXPECT_EQ(z2, cd{});
  const auto g = ReflectionCoefficient::gaussian(0.01);
  const auto [a, b] = c1_c2(g, 0.0, 0.0);
  EXPECT_NEAR(std::abs(a - 0.02), 0.0, 1e-17);
  EXPECT_NEAR(std::abs(b), 0.0, 1e-17);
  const auto [c, d] = c1_c2(g, 0.0, 1.3);
  EXPECT_NEAR(std::abs(c - 2.0 * g.plus(lambda_of_xi(1.3))), 0.0, 1e-17);
  EXPECT_EQ(d, cd{});
  const auto t = ReflectionCoefficient::table({{kInvSqrt2, 0.3, 0.1}, {3.0, 0.0, 0.0}});
  for (double tt : {0.0, 0.7}) {
    const auto [e, f] = c1_c2(t, tt, 0.4);
    EXPECT_NEAR(std::abs(e - std::conj(c1_c2(t, tt, -0.4).first)), 0.0, 1e-16);  // real kernels
    EXPECT_NEAR(std::abs(f - std::conj(c1_c2(t, tt, -0.4).second)), 0.0, 1e-16);
  }
}

TEST(Discrete, Examples) {
  const auto empty = ScatteringData::validate({}, {});
  const auto z = discrete_kernels(empty, 0.0, 0.0);
  EXPECT_EQ(z.f11, 0.0);
  EXPECT_EQ(z.f21, 0.0);
  EXPECT_EQ(z.f21_prime, 0.0);
  const auto one = ScatteringData::validate({0.0}, {-1.0});
  const auto k = discrete_kernels(one, 0.0, 0.0);
  EXPECT_EQ(k.f11, 0.0);
  EXPECT_DOUBLE_EQ(k.f21, -1.0);
  EXPECT_NEAR(k.f21_prime, kInvSqrt2, 1e-15);
  const auto far = discrete_kernels(one, 0.0, 100.0);
  EXPECT_LT(std::abs(far.f21), 1e-30);
}

TEST(Discrete, KahanMatchesNaive) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> zs(-5, 10);
  const auto d = ScatteringData::validate({-0.6, -0.2, 0.1, 0.3, 0.5, 0.65}, {-1, -0.3, -2, -0.7, -1.1, -0.2});
  for (int i = 0; i < 100; ++i) {
    const double z = zs(rng), t = zs(rng) / 10;
    double n11 = 0, n21 = 0;
    for (std::size_t k = d.size(); k-- > 0;) {
      n11 += d.mu(k, t) * d.lambda(k) * std::exp(-d.nu(k) * z);
      n21 += d.mu(k, t) * std::exp(-d.nu(k) * z);
    }
    const auto dk = discrete_kernels(d, t, z);
    EXPECT_LE(std::abs(dk.f11 - n11), 1e-14 * std::max(1.0, std::abs(n11)));
    EXPECT_LE(std::abs(dk.f21 - n21), 1e-14 * std::max(1.0, std::abs(n21)));
  }
}

TEST(Fourier, ZeroReflection) {
  const auto fk = fourier_kernels(ReflectionCoefficient::none(), 0.0, Axis{-5, 0.5, 21});
  for (int k = 0; k < 4; ++k) {
    for (const cd& v : fk.f12[k]) EXPECT_EQ(v, cd{});
    for (const cd& v : fk.f22[k]) EXPECT_EQ(v, cd{});
  }
}

TEST(Fourier, GaussianPairOracle) {
  const double a = 0.01;
  const auto fk = fourier_kernels(ReflectionCoefficient::gaussian(a), 0.0, Axis{-30, 0.05, 1201});
  double err = 0.0, f22 = 0.0;
  for (std::size_t m = 0; m < fk.z.count; ++m) {
    const double z = fk.z.at(m);
    err = std::max(err, std::abs(fk.f12[0][m] - a / std::sqrt(kPi) * std::exp(-z * z / 4)));
    // derivative oracle: d/dz e^{-z^2/4} = -z/2 e^{-z^2/4}
    err = std::max(err, std::abs(fk.f12[1][m] + a / std::sqrt(kPi) * z / 2 * std::exp(-z * z / 4)));
    f22 = std::max(f22, std::abs(fk.f22[0][m]));
  }
  EXPECT_LE(err, 1e-10);
  EXPECT_LE(f22, 1e-15);
  EXPECT_LE(fk.error_bound, 1e-12);
}

TEST(Fourier, Plancherel) {
  const double a = 0.05;
  const auto g = ReflectionCoefficient::gaussian(a);
  const Axis z{-40, 0.02, 4001};
  const auto fk = fourier_kernels(g, 0.0, z);
  double lhs = 0.0;
  for (std::size_t m = 0; m < z.count; ++m) lhs += std::norm(fk.f12[0][m]) * z.step;
  // (1/2 pi) int |c1|^2 = (1/2 pi) 4 a^2 sqrt(pi/2)
  const double rhs = 4 * a * a * std::sqrt(kPi / 2) / (2 * kPi);
  EXPECT_NEAR(lhs, rhs, 1e-8);
}

TEST(Fourier, DerivativeConsistencyOrderTwo) {
  const auto g = ReflectionCoefficient::gaussian(0.02);
  const double t = 0.6;
  std::vector<double> errs;
  for (double dz : {0.2, 0.1, 0.05}) {
    const Axis z{-6.0, dz, static_cast<std::size_t>(std::llround(12.0 / dz)) + 1};
    const auto fk = fourier_kernels(g, t, z);
    double e = 0.0;
    for (std::size_t m = 1; m + 1 < z.count; ++m) {
      const cd fd = (fk.f22[0][m + 1] - fk.f22[0][m - 1]) / (2 * dz);
      e = std::max(e, std::abs(fd - fk.f22[1][m]));
    }
    errs.push_back(e);
  }
  for (std::size_t i = 0; i + 1 < errs.size(); ++i) {
    EXPECT_NEAR(std::log2(errs[i] / errs[i + 1]), 2.0, 0.2);
  }
}

namespace {

struct Combined {
  cd f1[4];
  cd f2[4];
};

// F1 = F12 - F11, F2 = F22 - F21 and z-derivatives up to order 3 at one z.
Combined combined(const ScatteringData& d, const ReflectionCoefficient& r, double t, double z) {
  const auto fk = fourier_kernels(r, t, Axis{z, 1.0, 1});
  Combined c{};
  for (int k = 0; k < 4; ++k) {
    const auto [f11, f21] = discrete_kernel_derivative(d, t, z, k);
    c.f1[k] = fk.f12[k][0] - f11;
    c.f2[k] = fk.f22[k][0] - f21;
  }
  return c;
}

}  // namespace

TEST(Fourier, TimeDerivativeIdentities) {
  const auto d = ScatteringData::validate({-0.3, 0.5}, {-1.0, -0.6});
  const auto r = ReflectionCoefficient::gaussian(0.05);
  const double dt = 1e-4;
  double gap_a = 0.0, gap_b = 0.0, gap_b_with_two = 0.0;
  for (double t : {0.0, 0.4}) {
    for (double z : {-2.0, 0.0, 0.7, 3.0}) {
      const Combined p = combined(d, r, t + dt, z), m = combined(d, r, t - dt, z), c = combined(d, r, t, z);
      const cd dt_f1 = (p.f1[0] - m.f1[0]) / (2 * dt);
      const cd dt_f2 = (p.f2[0] - m.f2[0]) / (2 * dt);
      gap_a = std::max(gap_a, std::abs(dt_f2 + 4.0 * c.f1[1]));
      gap_b = std::max(gap_b, std::abs(dt_f1 - (-2.0 * c.f2[1] + 4.0 * c.f2[3])));
      gap_b_with_two = std::max(gap_b_with_two, std::abs(dt_f1 - (-2.0 * c.f2[1] + 2.0 * c.f2[3])));
    }
  }
  EXPECT_LE(gap_a, 1e-6);
  EXPECT_LE(gap_b, 1e-6);
  // The third-derivative coefficient really is 4: the variant with 2 is far off.
  EXPECT_GT(gap_b_with_two, 1e-3);
}

TEST(Table, ZeroReflectionAndDiscreteOmega) {
  const auto d = ScatteringData::validate({0.2}, {-1.5});
  const KernelTable tab = operator_kernels(d, ReflectionCoefficient::none(), 0.5, -2, 2, 10);
  EXPECT_FALSE(tab.has_continuous());
  EXPECT_EQ(tab.t_hat(1.0).norm(), 0.0);
  EXPECT_EQ(tab.forcing(1.0).norm(), 0.0);
  const Eigen::Matrix2cd om = tab.omega(0.3);
  const double mu = d.mu(0, 0.5), nu = d.nu(0);
  const double e = std::exp(-nu * 0.3);
  EXPECT_NEAR(std::abs(om(0, 0) + mu * e), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(om(0, 1) + mu * kSqrt2 * cd(0.2, nu) * e), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(om(1, 0) + mu * kSqrt2 * cd(0.2, -nu) * e), 0.0, 1e-15);
  EXPECT_THROW(tab.t_hat(100.0), DomainError);
}

TEST(Table, HermitianAndAssembly) {
  const auto empty = ScatteringData::validate({}, {});
  const auto g = ReflectionCoefficient::gaussian(0.03);
  for (double t : {0.0, 0.8}) {
    const KernelTable tab = operator_kernels(empty, g, t, -1, 1, 5);
    const auto& fk = tab.fourier();
    for (std::size_t m = 0; m < tab.z_axis().count; m += 97) {
      const double z = tab.z_axis().at(m);
      const Eigen::Matrix2cd th = tab.t_hat(z);
      EXPECT_LE((th - th.adjoint()).norm(), 1e-12);
      EXPECT_EQ(tab.omega(z).norm(), 0.0);
      EXPECT_NEAR(std::abs(th(0, 0) + fk.f22[0][m]), 0.0, 1e-15);
      EXPECT_NEAR(std::abs(th(1, 0) + kSqrt2 * (fk.f12[0][m] + cd(0, 1) * fk.f22[1][m])), 0.0, 1e-15);
      const Eigen::Vector2cd f = tab.forcing(z);
      EXPECT_NEAR(std::abs(f(1) + th(1, 0)), 0.0, 1e-15);
    }
  }
}

TEST(Table, InterpolationWithinBudget) {
  const double a = 0.01;
  const auto empty = ScatteringData::validate({}, {});
  const KernelTable tab(empty, ReflectionCoefficient::gaussian(a), 0.0, -10, 10);
  double err = 0.0;
  for (double z = -9.9; z < 9.9; z += 0.0123) {
    err = std::max(err, std::abs(tab.f12(z) - a / std::sqrt(kPi) * std::exp(-z * z / 4)));
  }
  EXPECT_LE(err, 1e-10);
  EXPECT_LE(err, tab.error_budget() + 1e-14);
  std::ostringstream os;
  tab.write_csv(os);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "z,F11,F21,F21p,re_F12,im_F12,re_F22,im_F22,re_F22p,im_F22p");
}

TEST(Table, RangeCoversHankelProducts) {
  const auto d = ScatteringData::validate({0.1}, {-1.0});
  const KernelTable tab = operator_kernels(d, ReflectionCoefficient::gaussian(0.01), 0.0, -3, 2, 20);
  EXPECT_TRUE(tab.covers(-6.0));
  EXPECT_TRUE(tab.covers(4.0 + 40.0));
}
