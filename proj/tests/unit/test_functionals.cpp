#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "pnp/functionals.hpp"
#include "pnp/quantile.hpp"
#include "pnp/steady_state.hpp"

using namespace pnp;

namespace {

Density<RadialGrid> random_profile(const GridPtr<RadialGrid>& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> R(0.8, 3.0), wig(0.0, 0.4), freq(1.0, 8.0);
  const double r0 = R(rng), a = wig(rng), f = freq(rng);
  std::vector<double> x(g->size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = g->center(i);
    x[i] = std::max(r0 * r0 - r * r, 0.0) * (1.0 + a * std::sin(f * r));
  }
  return Density<RadialGrid>::normalized(g, std::move(x));
}

struct Problem {
  GridPtr<RadialGrid> g = make_grid<RadialGrid>(256, 4.0);
  Model<RadialGrid> m;
  SteadyState<RadialGrid> ss;
  explicit Problem(double eps)
      : m(g, PotentialSpec::quadratic(1.0), PotentialSpec::quadratic(1.5), CouplingParams(eps)),
        ss(solve_steady(m, SteadySolverConfig{})) {}
};

}  // namespace

TEST(Energy, BreakdownSumsToTotal) {
  Problem s(0.05);
  const auto e = energy(uniform_ball(s.g, 2.0), uniform_ball(s.g, 1.0), s.m);
  EXPECT_NEAR(e.total, e.internal_u + e.internal_v + e.confinement_u + e.confinement_v + e.coupling, 1e-14);
  EXPECT_GT(e.coupling, 0.0);
}

TEST(Energy, UniformBallInternalEnergy) {
  // int u^2 of the unit-mass ball of radius R is 1/|B_R|
  const auto g = make_grid<RadialGrid>(400, 4.0);
  const Model<RadialGrid> m(g, PotentialSpec::quadratic(1.0), PotentialSpec::quadratic(1.0), CouplingParams(0.0));
  const auto e = energy(uniform_ball(g, 2.0), uniform_ball(g, 2.0), m);
  EXPECT_NEAR(e.internal_u, 1.0 / ball_volume(2.0), 1e-12);
  // int |x|^2/2 over the unit ball of radius R is 3R^2/10
  EXPECT_NEAR(e.confinement_u, 0.3 * 4.0, 1e-4);
  EXPECT_EQ(e.coupling, 0.0);
}

TEST(Energy, SteadyStateMinimizesEnergy) {
  for (double eps : {0.0, 0.05}) {
    Problem s(eps);
    std::mt19937_64 rng(11);
    const double E0 = s.ss.energy_at_steady.total;
    for (int k = 0; k < 30; ++k) EXPECT_GE(energy(random_profile(s.g, rng), random_profile(s.g, rng), s.m).total, E0);
  }
}

TEST(AuxEntropy, VanishesAtSteadyState) {
  Problem s(0.05);
  EXPECT_NEAR(aux_entropy(s.ss.u_inf, s.ss.v_inf, s.ss, s.m), 0.0, 1e-14);
}

TEST(AuxEntropy, SandwichLowerBound) {
  for (double eps : {0.0, 0.05, 0.1}) {
    Problem s(eps);
    std::mt19937_64 rng(5);
    for (int k = 0; k < 50; ++k) {
      const auto u = random_profile(s.g, rng), v = random_profile(s.g, rng);
      const double du = l2_distance(u, s.ss.u_inf), dv = l2_distance(v, s.ss.v_inf);
      EXPECT_LE(du * du + dv * dv, aux_entropy(u, v, s.ss, s.m) * (1.0 + 1e-9) + 1e-12);
    }
  }
}

TEST(AuxEntropy, EqualsRelativeEnergyWithoutCoupling) {
  Problem s(0.0);
  std::mt19937_64 rng(6);
  for (int k = 0; k < 20; ++k) {
    const auto u = random_profile(s.g, rng), v = random_profile(s.g, rng);
    EXPECT_NEAR(aux_entropy(u, v, s.ss, s.m), energy(u, v, s.m).total - s.ss.energy_at_steady.total, 1e-12);
  }
}

TEST(AuxEntropy, CouplingGapBoundedByPotentialSup) {
  for (double eps : {0.01, 0.05, 0.1}) {
    Problem s(eps);
    const double bound = 3.0 * lp_norm(s.ss.psi_inf, kInfNorm);
    std::mt19937_64 rng(8);
    for (int k = 0; k < 20; ++k) {
      const auto u = random_profile(s.g, rng), v = random_profile(s.g, rng);
      const double gap = aux_entropy(u, v, s.ss, s.m) - (energy(u, v, s.m).total - s.ss.energy_at_steady.total);
      EXPECT_LE(gap / eps, bound);
    }
  }
}

TEST(Dissipation, VanishesAtSteadyStateAndIsPositiveElsewhere) {
  for (double eps : {0.0, 0.05}) {
    Problem s(eps);
    EXPECT_NEAR(dissipation(s.ss.u_inf, s.ss.v_inf, s.ss, s.m).value, 0.0, 1e-10);
    const auto d = dissipation(uniform_ball(s.g, 2.0), uniform_ball(s.g, 2.0), s.ss, s.m);
    EXPECT_GT(d.value, 0.0);
    EXPECT_NEAR(d.coercive, d.coercive_u + d.coercive_v, 1e-14);
    EXPECT_NEAR(d.value, (1 - eps / 2) * d.coercive - eps / 2 * d.coupling, 1e-14);
  }
}

TEST(Functionals, RejectMismatchedSteadyState) {
  Problem s(0.05);
  const Model<RadialGrid> other = s.m.with_epsilon(0.1);
  EXPECT_THROW(aux_entropy(s.ss.u_inf, s.ss.v_inf, s.ss, other), InvalidArgument);
  const auto g2 = make_grid<RadialGrid>(128, 4.0);
  EXPECT_THROW(aux_entropy(uniform_ball(g2, 1.0), uniform_ball(g2, 1.0), s.ss, s.m), GridMismatch);
}

// --- W2 -----------------------------------------------------------------------

TEST(Wasserstein, UniformBallsClosedForm) {
  // the optimal map between centered uniform balls is x -> (b/a) x, so
  // W2^2 = (a - b)^2 int |x|^2 d(ball_a) / a^2 = 3 (a - b)^2 / 5
  const auto g = make_grid<RadialGrid>(1024, 4.0);
  for (auto [a, b] : {std::pair{1.0, 2.0}, std::pair{0.5, 3.0}, std::pair{2.0, 2.5}}) {
    const double exact = std::abs(a - b) * std::sqrt(0.6);
    EXPECT_NEAR(w2_radial(uniform_ball(g, a), uniform_ball(g, b)), exact, 2e-3 * exact);
  }
}

TEST(Wasserstein, MonotoneCouplingBeatsEveryAssignment) {
  // brute force over assignments of 200 equal-mass atoms: random
  // permutations and all pairwise swaps never cost less than the sorted one
  const auto g = make_grid<RadialGrid>(400, 4.0);
  std::mt19937_64 rng(9);
  const auto qa = density_to_quantile(random_profile(g, rng), 200);
  const auto qb = density_to_quantile(random_profile(g, rng), 200);
  auto cost = [&](const std::vector<std::size_t>& p) {
    double s = 0.0;
    for (std::size_t k = 0; k < 200; ++k) s += (qa.X[k] - qb.X[p[k]]) * (qa.X[k] - qb.X[p[k]]);
    return std::sqrt(s / 200.0);
  };
  std::vector<std::size_t> id(200);
  std::iota(id.begin(), id.end(), 0);
  const double best = w2_quantiles(qa, qb);
  EXPECT_NEAR(best, cost(id), 1e-15);
  for (int t = 0; t < 200; ++t) {
    auto p = id;
    std::shuffle(p.begin(), p.end(), rng);
    EXPECT_GE(cost(p), best);
  }
  for (std::size_t i = 0; i < 200; ++i)
    for (std::size_t j = i + 1; j < 200; ++j) {
      auto p = id;
      std::swap(p[i], p[j]);
      ASSERT_GE(cost(p), best - 1e-15);
    }
}

TEST(Wasserstein, MetricProperties) {
  const auto g = make_grid<RadialGrid>(300, 4.0);
  std::mt19937_64 rng(10);
  const auto a = random_profile(g, rng), b = random_profile(g, rng), c = random_profile(g, rng);
  EXPECT_NEAR(w2_radial(a, a), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(w2_radial(a, b), w2_radial(b, a));
  EXPECT_LE(w2_radial(a, c), w2_radial(a, b) + w2_radial(b, c) + 1e-14);
  const double pm = product_metric(a, b, c, a);
  EXPECT_NEAR(pm * pm, std::pow(w2_radial(a, c), 2) + std::pow(w2_radial(b, a), 2), 1e-14);
}
