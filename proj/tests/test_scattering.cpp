#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gpm/scattering.hpp"

using namespace gpm;

TEST(Validate, AcceptsTwoSolitonData) {
  const auto d = ScatteringData::validate({-0.5, 0.5}, {-1.0, -1.0});
  ASSERT_EQ(d.size(), 2u);
  EXPECT_NEAR(d.nu(0), 0.5, 1e-15);
  EXPECT_NEAR(d.nu(1), 0.5, 1e-15);
}

TEST(Validate, RejectsBadInput) {
  EXPECT_THROW(ScatteringData::validate({0.5, -0.5}, {-1.0, -1.0}), DomainError);
  EXPECT_THROW(ScatteringData::validate({0.3}, {1.0}), DomainError);
  EXPECT_THROW(ScatteringData::validate({0.3}, {0.0}), DomainError);
  EXPECT_THROW(ScatteringData::validate({0.1, 0.1}, {-1.0, -1.0}), DomainError);
  EXPECT_THROW(ScatteringData::validate({0.8}, {-1.0}), DomainError);
  EXPECT_THROW(ScatteringData::validate({kInvSqrt2 - 1e-8}, {-1.0}), DomainError);
  EXPECT_THROW(ScatteringData::validate({0.1, 0.2}, {-1.0}), DomainError);
}

TEST(Validate, EmptyDataIsAllowed) {
  const auto d = ScatteringData::validate({}, {});
  EXPECT_TRUE(d.empty());
}

TEST(Validate, GuardBandIsConfigurable) {
  EXPECT_NO_THROW(ScatteringData::validate({kInvSqrt2 - 1e-8}, {-1.0}, 1e-9));
}

TEST(SpectralMaps, NuExamples) {
  EXPECT_NEAR(nu_of_lambda(0.0), 0.70710678118654752, 1e-15);
  EXPECT_NEAR(nu_of_lambda(0.5), 0.5, 1e-15);
  EXPECT_NEAR(nu_of_lambda(0.7), 0.1, 1e-14);
  EXPECT_THROW(nu_of_lambda(0.75), DomainError);
}

TEST(SpectralMaps, EvolveMuExamples) {
  EXPECT_DOUBLE_EQ(evolve_mu(-1.0, 0.0, 7.0), -1.0);
  EXPECT_NEAR(evolve_mu(-1.0, 0.5, 1.0), -std::exp(1.0), 1e-14);
  EXPECT_DOUBLE_EQ(evolve_mu(-2.0, 0.5, 0.0), -2.0);
  EXPECT_THROW(evolve_mu(1.0, 0.5, 0.0), DomainError);
}

TEST(SpectralMaps, SpeedAndAngle) {
  EXPECT_DOUBLE_EQ(speed_of_lambda(0.5), 1.0);
  EXPECT_NEAR(theta_of_speed(1.0), kPi / 4, 1e-15);
  EXPECT_NEAR(theta_of_speed(0.0), kPi / 2, 1e-15);
  EXPECT_NEAR(theta_of_speed(speed_of_lambda(-0.5)), 3 * kPi / 4, 1e-15);
  EXPECT_THROW(theta_of_speed(1.5), DomainError);
}

TEST(SpectralMaps, Properties) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lam(-0.7, 0.7), tt(-3.0, 3.0), mu(-5.0, -0.1);
  double prev_theta = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double l = lam(rng);
    const double nu = nu_of_lambda(l);
    EXPECT_NEAR(nu * nu + l * l, 0.5, 1e-15);
    const double m0 = mu(rng), s = tt(rng), t = tt(rng);
    const double direct = evolve_mu(m0, l, s + t);
    EXPECT_NEAR(evolve_mu(evolve_mu(m0, l, s), l, t), direct, 1e-12 * std::abs(direct));
  }
  for (double l = -0.7; l <= 0.7; l += 0.01) {
    const double th = theta_of_speed(speed_of_lambda(l));
    EXPECT_GT(th, 0.0);
    EXPECT_LT(th, kPi);
    EXPECT_LT(th, prev_theta);
    prev_theta = th;
  }
}

TEST(SolitonParamsTest, SpeedBound) {
  EXPECT_NO_THROW(SolitonParams(1.0, 0.0, 0.0));
  EXPECT_THROW(SolitonParams(1.5), DomainError);
}

TEST(Reflection, Families) {
  const auto none = ReflectionCoefficient::none();
  EXPECT_TRUE(none.is_zero());
  EXPECT_EQ(none.plus(2.0), 0.0);
  const auto g = ReflectionCoefficient::gaussian(0.01);
  EXPECT_NEAR(g.plus(kInvSqrt2), 0.01, 1e-17);
  EXPECT_NEAR(g(-lambda_of_xi(1.0)), 0.01 * std::exp(-1.0), 1e-15);
  EXPECT_THROW(ReflectionCoefficient::gaussian(0.01, 1.0, 2), DomainError);
  const auto t = ReflectionCoefficient::table({{kInvSqrt2, 0.1, 0.2}, {2.0, 0.0, 0.0}});
  EXPECT_NEAR(t.plus(kInvSqrt2), 0.1, 1e-15);
  EXPECT_NEAR(t.minus(0.5 * (kInvSqrt2 + 2.0)), 0.1, 1e-12);
  EXPECT_EQ(t.plus(3.0), 0.0);
  EXPECT_THROW(ReflectionCoefficient::table({{0.5, 0.1, 0.1}, {2.0, 0.0, 0.0}}), DomainError);
}

TEST(Reflection, CutoffBoundsTail) {
  const auto g = ReflectionCoefficient::gaussian(0.01, 1.0);
  const double xi = g.xi_cutoff(1e-14);
  EXPECT_LT(g.tail_bound(xi), 1e-14);
  EXPECT_GT(g.tail_bound(xi - 0.1), 1e-14);
  EXPECT_GT(g.polynomial_cutoff(1e-12), xi);
  EXPECT_LT(g.weighted_sup(5), 1.0);
}
