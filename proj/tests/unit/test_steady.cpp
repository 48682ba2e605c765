#include <gtest/gtest.h>

#include <cmath>

#include "pnp/functionals.hpp"
#include "pnp/steady_state.hpp"

using namespace pnp;

namespace {

// Mass of 1/2 [C - r^2/2]_+ in R^3 by Simpson on its support, then the C
// with unit mass by bisection.
double cutoff_mass(double C) {
  const double R = std::sqrt(2.0 * C);
  const int n = 2000;
  const double h = R / n;
  auto f = [&](double r) { return 0.5 * (C - 0.5 * r * r) * 4.0 * kPi * r * r; };
  double s = f(0.0) + f(R);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return s * h / 3.0;
}

double steady_constant_oracle() {
  double lo = 0.0, hi = 10.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (cutoff_mass(mid) < 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Model<RadialGrid> radial_model(double eps, double lambda_v = 1.0, std::size_t n = 512) {
  return Model<RadialGrid>(make_grid<RadialGrid>(n, 4.0), PotentialSpec::quadratic(1.0),
                           PotentialSpec::quadratic(lambda_v), CouplingParams(eps));
}

}  // namespace

TEST(Steady, DecoupledConstantMatchesQuadratureOracle) {
  const double C = steady_constant_oracle();
  EXPECT_NEAR(C, std::pow(15.0 / (std::pow(2.0, 3.5) * kPi), 0.4), 1e-10);
  const auto ss = solve_steady(radial_model(0.0), SteadySolverConfig{});
  EXPECT_NEAR(ss.C_u, C, 1e-4);
  EXPECT_NEAR(ss.C_v, C, 1e-4);
  EXPECT_EQ(ss.residual_u, 0.0);
}

TEST(Steady, DecoupledProfile) {
  const auto m = radial_model(0.0);
  const auto ss = solve_steady(m, SteadySolverConfig{});
  const double C = steady_constant_oracle();
  for (std::size_t i = 0; i < m.grid().size(); ++i) {
    const double r = m.grid().center(i);
    EXPECT_NEAR(ss.u_inf[i], 0.5 * std::max(C - 0.5 * r * r, 0.0), 2e-3);
  }
}

TEST(Steady, CoupledSolutionSatisfiesCutoffEquations) {
  const auto m = radial_model(0.1, 1.5);
  const auto ss = solve_steady(m, SteadySolverConfig{});
  EXPECT_NEAR(mass(ss.u_inf), 1.0, 1e-10);
  EXPECT_NEAR(mass(ss.v_inf), 1.0, 1e-10);
  EXPECT_LT(ss.residual_u, 1e-8);
  EXPECT_LT(ss.residual_v, 1e-8);
  // psi_inf is the potential of the steady charge
  const auto psi = m.potential(ss.u_inf, ss.v_inf);
  for (std::size_t i = 0; i < psi.size(); ++i) EXPECT_NEAR(ss.psi_inf[i], psi[i], 1e-14);
  EXPECT_GT(lp_norm(ss.psi_inf, kInfNorm), 0.0);
  EXPECT_NEAR(dissipation(ss.u_inf, ss.v_inf, ss, m).value, 0.0, 1e-8);
}

TEST(Steady, IndependentOfInitialGuess) {
  const auto m = radial_model(0.05, 1.5);
  const auto a = solve_steady(m, SteadySolverConfig{});
  const auto b = solve_steady<RadialGrid>(m, SteadySolverConfig{},
                                          std::make_pair(uniform_ball(m.grid_ptr(), 1.0), uniform_ball(m.grid_ptr(), 2.5)));
  EXPECT_LT(l2_distance(a.u_inf, b.u_inf), 1e-9);
  EXPECT_LT(l2_distance(a.v_inf, b.v_inf), 1e-9);
  EXPECT_NEAR(a.C_u, b.C_u, 1e-9);
}

TEST(Steady, SymmetricPairStaysNeutral) {
  const auto ss = solve_steady(radial_model(0.1), SteadySolverConfig{});
  EXPECT_NEAR(ss.C_u, ss.C_v, 1e-14);
  EXPECT_LT(lp_norm(ss.psi_inf, kInfNorm), 1e-14);
}

TEST(Steady, NonConvergenceIsReported) {
  SteadySolverConfig cfg;
  cfg.max_iterations = 1;
  cfg.tolerance = 1e-14;
  EXPECT_THROW(solve_steady(radial_model(0.1, 1.5), cfg), NonConvergence);
}

TEST(Steady, InvalidConfigRejected) {
  SteadySolverConfig cfg;
  cfg.damping = 0.0;
  EXPECT_THROW(solve_steady(radial_model(0.0), cfg), InvalidArgument);
}

TEST(Steady, BoxCoupledInstance) {
  const auto g = make_grid<BoxGrid3>(32, 4.0);
  const Model<BoxGrid3> m(g, PotentialSpec::anisotropic({1.0, 1.5, 2.0}, {0.25, 0.0, 0.0}),
                          PotentialSpec::quadratic(1.5, {-0.25, 0.1, 0.0}), CouplingParams(0.05));
  const auto ss = solve_steady(m, SteadySolverConfig{});
  EXPECT_NEAR(mass(ss.u_inf), 1.0, 1e-10);
  EXPECT_LT(ss.residual_u, 1e-8);
  EXPECT_LT(ss.residual_v, 1e-8);
  EXPECT_NEAR(aux_entropy(ss.u_inf, ss.v_inf, ss, m), 0.0, 1e-12);
}
