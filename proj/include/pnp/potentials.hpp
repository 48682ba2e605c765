#pragma once

// Confinement potentials: anisotropic quadratics with an optional bounded
// trigonometric perturbation,
//
//   U(x) = 1/2 sum_i w_i (x - c)_i^2 + a (cos(k . (x - c)) - 1),
//
// uniformly convex with modulus min(w) - a|k|^2 and minimum U(c) = 0.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <utility>

#include "pnp/error.hpp"
#include "pnp/grid.hpp"

namespace pnp {

enum class PotentialKind { quadratic_anisotropic, quadratic_plus_bounded };

class PotentialSpec {
 public:
  /// Isotropic lambda0/2 |x - center|^2.
  static PotentialSpec quadratic(double lambda0, const Vec3& center = {}) {
    return PotentialSpec(PotentialKind::quadratic_anisotropic, lambda0, center, {lambda0, lambda0, lambda0}, 0.0, {});
  }

  /// 1/2 sum w_i (x - c)_i^2 with declared modulus min(w).
  static PotentialSpec anisotropic(const Vec3& weights, const Vec3& center = {}) {
    const double l0 = std::min({weights[0], weights[1], weights[2]});
    return PotentialSpec(PotentialKind::quadratic_anisotropic, l0, center, weights, 0.0, {});
  }

  /// Quadratic plus a (cos(k.(x-c)) - 1). `lambda0` <= 0 declares the exact
  /// lower Hessian bound min(w) - a|k|^2.
  static PotentialSpec perturbed(const Vec3& weights, double amplitude, const Vec3& wavevector,
                                 const Vec3& center = {}, double lambda0 = 0.0) {
    const double bound = std::min({weights[0], weights[1], weights[2]}) - amplitude * norm2(wavevector);
    return PotentialSpec(PotentialKind::quadratic_plus_bounded, lambda0 > 0.0 ? lambda0 : bound, center, weights,
                         amplitude, wavevector);
  }

  PotentialSpec(PotentialKind kind, double lambda0, const Vec3& center, const Vec3& weights, double amplitude,
                const Vec3& wavevector)
      : kind_(kind),
        lambda0_(lambda0),
        center_(center),
        weights_(weights),
        amplitude_(amplitude),
        wavevector_(wavevector) {
    for (double x : center_)
      if (!std::isfinite(x)) throw InvalidArgument("potential: center must be finite");
    if (!(lambda0_ > 0.0)) throw InvalidArgument("potential: lambda0 must be > 0 (merely convex potentials are rejected)");
    for (double w : weights_)
      if (!(w >= lambda0_) || !std::isfinite(w)) throw InvalidArgument("potential: axis weights must be >= lambda0");
    if (amplitude_ < 0.0 || !std::isfinite(amplitude_))
      throw InvalidArgument("potential: perturbation amplitude must be >= 0");
    if (kind_ == PotentialKind::quadratic_anisotropic && amplitude_ != 0.0)
      throw InvalidArgument("potential: quadratic_anisotropic takes no perturbation");
    if (hessian_lower_bound() < lambda0_ - 1e-12) {
      std::ostringstream os;
      os << "potential: declared lambda0 " << lambda0_ << " exceeds the Hessian lower bound " << hessian_lower_bound();
      throw InvalidArgument(os.str());
    }
  }

  PotentialKind kind() const { return kind_; }
  double lambda0() const { return lambda0_; }
  const Vec3& center() const { return center_; }
  const Vec3& weights() const { return weights_; }
  double amplitude() const { return amplitude_; }
  const Vec3& wavevector() const { return wavevector_; }

  double hessian_lower_bound() const {
    return std::min({weights_[0], weights_[1], weights_[2]}) - amplitude_ * norm2(wavevector_);
  }
  double hessian_upper_bound() const {
    return std::max({weights_[0], weights_[1], weights_[2]}) + amplitude_ * norm2(wavevector_);
  }

  /// Radially symmetric about the origin (required by radial solvers).
  bool is_radial() const {
    return center_ == Vec3{} && weights_[0] == weights_[1] && weights_[1] == weights_[2] && amplitude_ == 0.0;
  }

  double eval(const Vec3& x) const {
    const Vec3 y{x[0] - center_[0], x[1] - center_[1], x[2] - center_[2]};
    double v = 0.5 * (weights_[0] * y[0] * y[0] + weights_[1] * y[1] * y[1] + weights_[2] * y[2] * y[2]);
    if (amplitude_ != 0.0) v += amplitude_ * (std::cos(dot(wavevector_, y)) - 1.0);
    return std::max(v, 0.0);
  }

  Vec3 grad(const Vec3& x) const {
    const Vec3 y{x[0] - center_[0], x[1] - center_[1], x[2] - center_[2]};
    Vec3 g{weights_[0] * y[0], weights_[1] * y[1], weights_[2] * y[2]};
    if (amplitude_ != 0.0) {
      const double s = amplitude_ * std::sin(dot(wavevector_, y));
      for (int i = 0; i < 3; ++i) g[i] -= s * wavevector_[i];
    }
    return g;
  }

  Eigen::Matrix3d hessian(const Vec3& x) const {
    Eigen::Matrix3d h = Eigen::Vector3d(weights_[0], weights_[1], weights_[2]).asDiagonal();
    if (amplitude_ != 0.0) {
      const Vec3 y{x[0] - center_[0], x[1] - center_[1], x[2] - center_[2]};
      const Eigen::Vector3d k(wavevector_[0], wavevector_[1], wavevector_[2]);
      h -= amplitude_ * std::cos(dot(wavevector_, y)) * k * k.transpose();
    }
    return h;
  }

  // Radial restriction; valid only when is_radial().
  double eval_radial(double r) const { return 0.5 * weights_[0] * r * r; }
  double deriv_radial(double r) const { return weights_[0] * r; }
  double second_deriv_radial(double) const { return weights_[0]; }

 private:
  PotentialKind kind_;
  double lambda0_;
  Vec3 center_;
  Vec3 weights_;
  double amplitude_;
  Vec3 wavevector_;
};

inline double eval(const PotentialSpec& spec, const Vec3& x) { return spec.eval(x); }
inline Vec3 grad(const PotentialSpec& spec, const Vec3& x) { return spec.grad(x); }

struct ConvexityBounds {
  double lambda_low;
  double lambda_high;
};

/// Extreme Rayleigh quotients of the analytic Hessian at `sample_count` random
/// points of [-3,3]^3 around the center: the eigenvalue extremes at each point
/// plus one random direction per point. Throws when the sampled lower bound
/// falls below the declared lambda0.
inline ConvexityBounds convexity_certificate(const PotentialSpec& spec, int sample_count, std::uint64_t seed = 1) {
  if (sample_count < 100) throw InvalidArgument("convexity_certificate: sample_count must be >= 100");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(-3.0, 3.0);
  std::normal_distribution<double> normal;
  ConvexityBounds out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (int s = 0; s < sample_count; ++s) {
    const Vec3 x{spec.center()[0] + box(rng), spec.center()[1] + box(rng), spec.center()[2] + box(rng)};
    const Eigen::Matrix3d h = spec.hessian(x);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(h, Eigen::EigenvaluesOnly);
    out.lambda_low = std::min(out.lambda_low, eig.eigenvalues()(0));
    out.lambda_high = std::max(out.lambda_high, eig.eigenvalues()(2));
    Eigen::Vector3d d(normal(rng), normal(rng), normal(rng));
    d.normalize();
    const double q = d.dot(h * d);
    out.lambda_low = std::min(out.lambda_low, q);
    out.lambda_high = std::max(out.lambda_high, q);
  }
  if (out.lambda_low < spec.lambda0() - 1e-9) {
    std::ostringstream os;
    os << "convexity certificate failed: sampled Hessian bound " << out.lambda_low << " < declared lambda0 "
       << spec.lambda0();
    throw InvalidArgument(os.str());
  }
  return out;
}

/// Cell-center samples of U.
template <class G>
ScalarField<G> sample_potential(const GridPtr<G>& grid, const PotentialSpec& spec) {
  if constexpr (G::dim == 1) {
    if (!spec.is_radial()) throw InvalidArgument("radial grids require an isotropic potential centered at the origin");
    return sample(grid, [&](double r) { return spec.eval_radial(r); });
  } else {
    return sample(grid, [&](const Vec3& x) { return spec.eval(x); });
  }
}

}  // namespace pnp
