#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gpm/validate.hpp"

using namespace gpm;

namespace {

template <typename Fn>
FieldGrid sample(const GridSpec& spec, Fn&& fn) {
  FieldGrid f(spec.t_axis(), spec.x_axis(), Provenance::NSoliton);
  for (std::size_t i = 0; i < f.t_axis().count; ++i)
    for (std::size_t j = 0; j < f.x_axis().count; ++j) f(i, j) = fn(f.t_axis().at(i), f.x_axis().at(j));
  return f;
}

const ScatteringData& three() {
  static const auto d = ScatteringData::validate({-0.42, 0.12, 0.55}, {-0.9, -1.7, -0.5});
  return d;
}

}  // namespace

TEST(Residual, VacuumIsExact) {
  const auto f = sample(GridSpec{0, 0.1, 0.05, -1, 1, 0.5}, [](double, double) { return cd(1.0); });
  const auto r = gp_residual(f);
  EXPECT_EQ(r.linf, 0.0);
  EXPECT_EQ(r.l2, 0.0);
  EXPECT_EQ(r.residual.x_axis().count, 3u);
  EXPECT_THROW(gp_residual(sample(GridSpec{0, 0.05, 0.05, -1, 1, 0.5}, [](double, double) { return cd(1.0); })),
               DomainError);
}

TEST(Residual, StaticSolitonOrderTwo) {
  std::vector<FieldGrid> fields;
  for (double h : {0.1, 0.05, 0.025}) {
    fields.push_back(sample(GridSpec{0, 0.2, 0.05, -8, 8, h}, [](double, double x) { return soliton_profile(0.0, x); }));
  }
  const auto study = gp_residual_study(fields);
  for (double o : study.orders) EXPECT_NEAR(o, 2.0, 0.2);
}

TEST(Residual, ExactFamiliesOrderTwo) {
  const auto one = ScatteringData::validate({0.3}, {-1.0});
  const auto two = ScatteringData::validate({-0.5, 0.5}, {-1.0, -1.0});
  for (const ScatteringData* d : {&one, &two, &three()}) {
    std::vector<FieldGrid> fields;
    for (double h : {0.04, 0.02, 0.01}) {
      fields.push_back(grid_eval(*d, GridSpec{-0.2, 0.2, h / 2, -6, 6, h}));
    }
    const auto study = gp_residual_study(fields);
    ASSERT_EQ(study.orders.size(), 2u);
    for (double o : study.orders) EXPECT_NEAR(o, 2.0, 0.2);
  }
}

TEST(Lax, BranchAndDomain) {
  const cd xi(0.3, -0.4);
  const cd l = lambda_of_xi(xi);
  EXPECT_NEAR(std::abs(l * l - xi * xi - 0.5), 0.0, 1e-15);
  EXPECT_GT(lambda_of_xi(cd(0.7, -1e-9)).real(), 0.0);
  const auto d = ScatteringData::validate({}, {});
  EXPECT_THROW(zs_eigenfunction(d, ReflectionCoefficient::none(), 0, Axis{0, 0.1, 5}, cd(0.3, 0.0)), DomainError);
}

TEST(Lax, VacuumFreeSolution) {
  const auto d = ScatteringData::validate({}, {});
  const cd xi(0.2, -0.3);
  std::vector<double> errs;
  for (double h : {0.02, 0.01}) {
    const Axis x = Axis::span(-3, 3, h);
    const auto st = zs_eigenfunction(d, ReflectionCoefficient::none(), 0.0, x, xi);
    for (std::size_t j = 0; j < x.count; j += 50) {
      EXPECT_LE((st.psi[j] - zs_free_solution(xi, st.lambda, x.at(j))).norm(), 0.0);
    }
    errs.push_back(lax_residual(st, std::vector<cd>(x.count, cd(1.0))));
  }
  EXPECT_NEAR(std::log2(errs[0] / errs[1]), 2.0, 0.1);
}

TEST(Lax, OneSolitonOrderTwoAndNegativeControl) {
  const auto d = ScatteringData::validate({0.2}, {-1.0});
  const cd xi(0.0, -0.45);
  std::vector<double> errs;
  double control = 0.0;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  for (double h : {0.04, 0.02, 0.01}) {
    const GridSpec spec{0.3, 0.3, 1.0, -8, 8, h};
    const FieldGrid f = grid_eval(d, spec);
    const auto st = zs_eigenfunction(d, ReflectionCoefficient::none(), 0.3, spec.x_axis(), xi);
    errs.push_back(lax_residual(st, f, 0));
    if (h == 0.01) {
      ZSState noise = st;
      for (auto& v : noise.psi) v = Eigen::Vector2cd(cd(n(rng), n(rng)), cd(n(rng), n(rng)));
      control = lax_residual(noise, f, 0);
    }
  }
  for (std::size_t i = 0; i + 1 < errs.size(); ++i) EXPECT_NEAR(std::log2(errs[i] / errs[i + 1]), 2.0, 0.2);
  EXPECT_GE(control, 100 * errs.back());
}

TEST(Lax, EigenfunctionTailDecay) {
  const auto d = ScatteringData::validate({0.0}, {-1.0});
  const cd xi(0.0, -0.45 * 0.9);
  const Axis x = Axis::span(0, 20, 0.5);
  const auto st = zs_eigenfunction(d, ReflectionCoefficient::none(), 0.0, x, xi);
  for (std::size_t j = 20; j < x.count; ++j) {
    EXPECT_TRUE(st.psi[j].allFinite());
    EXPECT_NEAR(st.psi[j].norm() / std::exp(xi.imag() * x.at(j)), st.psi[20].norm() / std::exp(xi.imag() * 10.0),
                1e-3);
  }
}

TEST(Lax, PerturbedEigenfunctionConvergesInHalfLineStep) {
  // With reflection the eigenfunction comes from a trapezoid integral of the
  // Marchenko kernel, so the residual floor is set by the half-line step.
  const auto d = ScatteringData::validate({0.0}, {-1.0});
  const auto refl = ReflectionCoefficient::gaussian(1e-2);
  const cd xi(0.1, -0.4);
  const GridSpec spec{0.0, 0.0, 1.0, -1, 1, 0.02};
  std::vector<double> res;
  for (std::size_t m : {400, 800}) {
    const HalfLineGrid g(40.0, m);
    const auto pf = perturbed_grid_eval(d, refl, spec, g);
    const auto st = zs_eigenfunction(d, refl, 0.0, spec.x_axis(), xi, g);
    res.push_back(lax_residual(st, pf.field, 0));
  }
  EXPECT_NEAR(std::log2(res[0] / res[1]), 2.0, 0.2);
  EXPECT_LE(res[1], 1e-3);
}

TEST(Cn, VacuumStays) {
  const Axis x = Axis::span(-2, 2, 0.1);
  const auto one = [](double) { return cd(1.0); };
  const auto f = cn_evolve(std::vector<cd>(x.count, cd(1.0)), x, 0, 0.5, 0.01, one, one);
  for (const cd& v : f.values()) EXPECT_LE(std::abs(v - 1.0), 1e-14);
}

TEST(Cn, StaticSolitonDriftIsSecondOrder) {
  std::vector<double> drift;
  for (double h : {0.02, 0.01}) {
    const Axis x = Axis::span(-10, 10, h);
    std::vector<cd> init(x.count);
    for (std::size_t j = 0; j < x.count; ++j) init[j] = soliton_profile(0.0, x.at(j));
    CnOptions opt;
    opt.save_stride = 100;
    const auto f = cn_evolve(init, x, 0, 1, 0.001, [&](double) { return init.front(); },
                             [&](double) { return init.back(); }, opt);
    double m = 0.0;
    for (std::size_t i = 0; i < f.t_axis().count; ++i)
      for (std::size_t j = 0; j < x.count; ++j) m = std::max(m, std::abs(f(i, j) - init[j]));
    drift.push_back(m);
  }
  EXPECT_LE(drift[1], 5e-6);
  EXPECT_NEAR(std::log2(drift[0] / drift[1]), 2.0, 0.2);
}

TEST(Cn, TwoSolitonTracksExactField) {
  const auto d = ScatteringData::validate({-0.5, 0.5}, {-1.0, -1.0});
  std::vector<double> gaps;
  for (double h : {0.04, 0.02}) {
    const Axis x = Axis::span(-15, 15, h);
    std::vector<cd> init(x.count);
    for (std::size_t j = 0; j < x.count; ++j) init[j] = u_N(d, 0.0, x.at(j));
    CnOptions opt;
    opt.save_stride = static_cast<std::size_t>(std::llround(0.5 / (h / 10)));
    const auto f = cn_evolve(init, x, 0, 1, h / 10, [&](double t) { return u_N(d, t, x.start); },
                             [&](double t) { return u_N(d, t, x.back()); }, opt);
    FieldGrid exact(f.t_axis(), x, Provenance::NSoliton);
    for (std::size_t i = 0; i < f.t_axis().count; ++i)
      for (std::size_t j = 0; j < x.count; ++j) exact(i, j) = u_N(d, f.t_axis().at(i), x.at(j));
    gaps.push_back(compare_fields(f, exact).linf);
    // background modulus near the walls
    const std::size_t last = f.t_axis().count - 1;
    const double init_dev = std::max(std::abs(std::abs(f(0, 1)) - 1), std::abs(std::abs(f(0, x.count - 2)) - 1));
    const double end_dev =
        std::max(std::abs(std::abs(f(last, 1)) - 1), std::abs(std::abs(f(last, x.count - 2)) - 1));
    EXPECT_LE(end_dev, 2 * init_dev + 1e-12);
  }
  EXPECT_LE(gaps[1], 5e-3);
  EXPECT_NEAR(std::log2(gaps[0] / gaps[1]), 2.0, 0.2);
}

TEST(Cn, Errors) {
  const Axis x = Axis::span(-2, 2, 0.1);
  const auto one = [](double) { return cd(1.0); };
  std::vector<cd> bad(x.count, cd(1.0));
  bad.front() = 0.5;
  EXPECT_THROW(cn_evolve(bad, x, 0, 1, 0.1, one, one), DomainError);
  EXPECT_THROW(cn_evolve(std::vector<cd>(x.count, cd(1.0)), x, 0, 1, 0.3, one, one), DomainError);
  std::vector<cd> big(x.count, cd(3.0));
  const auto three_bc = [](double) { return cd(3.0); };
  EXPECT_THROW(cn_evolve(big, x, 0, 5, 1.0, three_bc, three_bc), SolverError);
}

TEST(Compare, Basics) {
  const auto d = ScatteringData::validate({0.2}, {-1.0});
  const GridSpec spec{0, 0, 1, -5, 5, 0.01};
  const auto a = grid_eval(d, spec);
  const auto z = compare_fields(a, a);
  EXPECT_EQ(z.linf, 0.0);
  EXPECT_EQ(z.rms, 0.0);
  FieldGrid b(a.t_axis(), a.x_axis(), Provenance::NSoliton);
  double max_ux = 0.0;
  for (std::size_t j = 0; j < a.x_axis().count; ++j) {
    const double xj = a.x_axis().at(j);
    b(0, j) = u_N(d, 0.0, xj + 0.01);
    max_ux = std::max(max_ux, std::abs(u_N(d, 0, xj + 1e-4) - u_N(d, 0, xj - 1e-4)) / 2e-4);
  }
  EXPECT_NEAR(compare_fields(a, b).linf, 0.01 * max_ux, 0.01 * max_ux * 0.05);
  EXPECT_THROW(compare_fields(a, grid_eval(d, GridSpec{0, 0, 1, -5, 5, 0.02})), DomainError);
}
