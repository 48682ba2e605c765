#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "pnp/grid.hpp"

using namespace pnp;

TEST(RadialGrid, VolumesSumToBall) {
  const auto g = make_grid<RadialGrid>(300, 3.0);
  double v = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) v += g->volume(i);
  EXPECT_NEAR(v, ball_volume(3.0), 1e-10);
}

TEST(RadialGrid, RejectsBadArguments) {
  EXPECT_THROW(RadialGrid(0, 1.0), InvalidArgument);
  EXPECT_THROW(RadialGrid(10, -1.0), InvalidArgument);
}

TEST(Density, UniformBallHasUnitMassAndExactProfile) {
  const auto g = make_grid<RadialGrid>(400, 4.0);
  const auto b = uniform_ball(g, 2.0);
  EXPECT_NEAR(mass(b), 1.0, 1e-14);
  // cells fully inside the ball carry 1/|B_2|
  EXPECT_NEAR(b[10], 1.0 / ball_volume(2.0), 1e-12);
  EXPECT_EQ(b[g->size() - 1], 0.0);
}

TEST(Density, RejectsNegativeAndNonFinite) {
  const auto g = make_grid<RadialGrid>(4, 1.0);
  EXPECT_THROW(Density<RadialGrid>(g, {1.0, -1e-3, 0.0, 0.0}), InvalidArgument);
  EXPECT_THROW(Density<RadialGrid>(g, {1.0, NAN, 0.0, 0.0}), InvalidArgument);
  EXPECT_THROW(Density<RadialGrid>(g, {1.0, 1.0}), InvalidArgument);
}

TEST(Density, NormalizedRejectsZeroMass) {
  const auto g = make_grid<RadialGrid>(4, 1.0);
  EXPECT_THROW(Density<RadialGrid>::normalized(g, std::vector<double>(4, 0.0)), InvalidArgument);
}

TEST(Density, BoxBallMassAndSymmetry) {
  const auto g = make_grid<BoxGrid3>(32, 2.0);
  const auto b = uniform_ball(g, 1.0);
  EXPECT_NEAR(mass(b), 1.0, 1e-13);
  const std::size_t n = g->n();
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) ASSERT_DOUBLE_EQ(b[g->index(i, j, k)], b[g->index(n - 1 - i, k, j)]);
}

TEST(Norms, ConstantField) {
  const auto g = make_grid<RadialGrid>(50, 2.0);
  const ScalarField<RadialGrid> f(g, std::vector<double>(50, 3.0));
  EXPECT_NEAR(lp_norm(f, 2.0), 3.0 * std::sqrt(ball_volume(2.0)), 1e-10);
  EXPECT_DOUBLE_EQ(lp_norm(f, kInfNorm), 3.0);
}

TEST(Norms, L2DistanceIsAMetric) {
  const auto g = make_grid<RadialGrid>(64, 3.0);
  const auto a = uniform_ball(g, 1.0), b = uniform_ball(g, 2.0), c = uniform_ball(g, 2.5);
  EXPECT_EQ(l2_distance(a, a), 0.0);
  EXPECT_DOUBLE_EQ(l2_distance(a, b), l2_distance(b, a));
  EXPECT_LE(l2_distance(a, c), l2_distance(a, b) + l2_distance(b, c) + 1e-15);
}

TEST(Gradient, RadialQuadraticIsLinear) {
  const auto g = make_grid<RadialGrid>(100, 2.0);
  const auto f = sample(g, [](double r) { return 0.5 * r * r; });
  const auto d = gradient(f);
  // central differences of r^2/2 are exact at interior centers
  for (std::size_t i = 1; i + 1 < g->size(); ++i) EXPECT_NEAR(d.values[i][0], g->center(i), 1e-12);
}

TEST(BoundaryDecay, FlagsMassNearTheEdge) {
  const auto g = make_grid<RadialGrid>(100, 2.0);
  EXPECT_TRUE(boundary_decay_ok(*g, uniform_ball(g, 1.0).values()));
  EXPECT_FALSE(boundary_decay_ok(*g, uniform_ball(g, 1.99).values()));
}

TEST(Snapshot, RoundTripIsBitExact) {
  const auto g = make_grid<RadialGrid>(37, 2.5);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(37);
  for (double& a : x) a = u(rng);
  const auto f = Density<RadialGrid>::normalized(g, x);
  std::stringstream ss;
  write_snapshot(ss, f, 1.25);
  const Snapshot s = read_snapshot(ss);
  EXPECT_EQ(s.kind, "radial");
  EXPECT_EQ(s.n, 37u);
  EXPECT_EQ(s.extent, 2.5);
  EXPECT_EQ(s.time, 1.25);
  ASSERT_EQ(s.values.size(), 37u);
  for (std::size_t i = 0; i < 37; ++i) EXPECT_EQ(s.values[i], f[i]);
}

TEST(Snapshot, BoxHeader) {
  const auto g = make_grid<BoxGrid3>(8, 1.0);
  std::stringstream ss;
  write_snapshot(ss, uniform_ball(g, 0.5), 0.0);
  const Snapshot s = read_snapshot(ss);
  EXPECT_EQ(s.kind, "box3");
  EXPECT_EQ(s.n, 8u);
  EXPECT_EQ(s.values.size(), 512u);
}

TEST(RadialToBox, ApproximatelyPreservesMass) {
  const auto rg = make_grid<RadialGrid>(256, 3.0);
  const auto bg = make_grid<BoxGrid3>(64, 3.0);
  const auto f = radial_to_box(uniform_ball(rg, 1.5), bg);
  EXPECT_NEAR(mass(f), 1.0, 2e-2);
}
