#include <gtest/gtest.h>

#include <random>

#include "pnp/potentials.hpp"

using namespace pnp;

namespace {

std::vector<PotentialSpec> specs() {
  return {PotentialSpec::quadratic(1.0), PotentialSpec::quadratic(2.0, {0.5, -0.25, 1.0}),
          PotentialSpec::anisotropic({1.0, 1.5, 2.0}, {0.25, 0.0, 0.0}),
          PotentialSpec::perturbed({1.5, 1.5, 1.5}, 0.05, {2.0, 0.0, 0.0}, {-0.25, 0.1, 0.0}),
          PotentialSpec::perturbed({1.0, 2.0, 3.0}, 0.1, {1.0, 1.0, -1.0})};
}

}  // namespace

TEST(Potential, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> box(-2.0, 2.0);
  const double h = 1e-5;
  for (const auto& s : specs()) {
    for (int trial = 0; trial < 50; ++trial) {
      const Vec3 x{box(rng), box(rng), box(rng)};
      const Vec3 g = s.grad(x);
      for (int a = 0; a < 3; ++a) {
        Vec3 p = x, m = x;
        p[a] += h;
        m[a] -= h;
        EXPECT_NEAR(g[a], (s.eval(p) - s.eval(m)) / (2 * h), 1e-7);
      }
    }
  }
}

TEST(Potential, HessianMatchesDifferencesOfGradient) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> box(-2.0, 2.0);
  const double h = 1e-5;
  for (const auto& s : specs()) {
    const Vec3 x{box(rng), box(rng), box(rng)};
    const auto H = s.hessian(x);
    for (int b = 0; b < 3; ++b) {
      Vec3 p = x, m = x;
      p[b] += h;
      m[b] -= h;
      const Vec3 gp = s.grad(p), gm = s.grad(m);
      for (int a = 0; a < 3; ++a) EXPECT_NEAR(H(a, b), (gp[a] - gm[a]) / (2 * h), 1e-6);
    }
  }
}

TEST(Potential, MinimumAtTheCenter) {
  for (const auto& s : specs()) {
    EXPECT_NEAR(s.eval(s.center()), 0.0, 1e-15);
    for (double gi : s.grad(s.center())) EXPECT_NEAR(gi, 0.0, 1e-15);
  }
}

TEST(Potential, ConvexityCertificateMeetsDeclaredBound) {
  for (const auto& s : specs()) {
    const auto b = convexity_certificate(s, 1000, 12345);
    EXPECT_GE(b.lambda_low, s.lambda0() - 1e-9);
    EXPECT_LE(b.lambda_low, b.lambda_high);
  }
}

TEST(Potential, PerturbedBoundIsTight) {
  // min weight 1.5 minus a |k|^2 = 1.5 - 0.05 * 4
  const auto s = PotentialSpec::perturbed({1.5, 1.5, 1.5}, 0.05, {2.0, 0.0, 0.0});
  EXPECT_NEAR(s.lambda0(), 1.3, 1e-15);
  const auto b = convexity_certificate(s, 5000, 1);
  EXPECT_LT(b.lambda_low, 1.3 + 1e-3);
}

TEST(Potential, RejectsInvalidParameters) {
  EXPECT_THROW(PotentialSpec::quadratic(0.0), InvalidArgument);
  EXPECT_THROW(PotentialSpec::quadratic(-1.0), InvalidArgument);
  EXPECT_THROW(PotentialSpec::anisotropic({1.0, 0.0, 1.0}), InvalidArgument);
  // perturbation strong enough to destroy uniform convexity
  EXPECT_THROW(PotentialSpec::perturbed({1.0, 1.0, 1.0}, 0.5, {2.0, 0.0, 0.0}), InvalidArgument);
  // declared lambda0 above what the Hessian allows
  EXPECT_THROW(PotentialSpec::perturbed({1.0, 1.0, 1.0}, 0.1, {1.0, 0.0, 0.0}, {}, 0.95), InvalidArgument);
  EXPECT_THROW(PotentialSpec::quadratic(1.0, {NAN, 0.0, 0.0}), InvalidArgument);
}

TEST(Potential, RadialQueries) {
  const auto s = PotentialSpec::quadratic(1.5);
  EXPECT_TRUE(s.is_radial());
  EXPECT_DOUBLE_EQ(s.eval_radial(2.0), 3.0);
  EXPECT_FALSE(PotentialSpec::quadratic(1.0, {1.0, 0.0, 0.0}).is_radial());
  EXPECT_FALSE(PotentialSpec::anisotropic({1.0, 2.0, 2.0}).is_radial());
}

TEST(Potential, CertificateRejectsTooFewSamples) {
  EXPECT_THROW(convexity_certificate(PotentialSpec::quadratic(1.0), 10), InvalidArgument);
}
