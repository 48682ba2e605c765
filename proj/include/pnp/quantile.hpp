#pragma once

// Lagrangian (mass-quantile) coordinates for radial probability measures.
// X[k] is the radius enclosing mass (k + 1/2)/K. Between consecutive quantile
// radii the cumulative mass is taken linear in enclosed volume, i.e. the
// density is constant on each shell [X_k, X_{k+1}]; the innermost half
// quantile fills the ball of radius X_0 and the outermost half quantile
// continues the last shell's density.

#include <algorithm>
#include <cmath>
#include <vector>

#include "pnp/error.hpp"
#include "pnp/grid.hpp"

namespace pnp {

struct QuantileRep {
  std::vector<double> X;

  std::size_t size() const { return X.size(); }
  double dm() const { return 1.0 / static_cast<double>(X.size()); }
  double operator[](std::size_t k) const { return X[k]; }
};

inline bool strictly_increasing_positive(const std::vector<double>& x) {
  if (x.empty() || !(x[0] > 0.0)) return false;
  for (std::size_t k = 1; k < x.size(); ++k)
    if (!(x[k] > x[k - 1])) return false;
  return true;
}

inline double radius_of_volume(double v) { return std::cbrt(v * 3.0 / (4.0 * kPi)); }

/// Quantile radii of a radial density; K defaults to the cell count.
inline QuantileRep density_to_quantile(const Density<RadialGrid>& f, std::size_t K = 0) {
  const RadialGrid& g = f.grid();
  const std::size_t n = g.size();
  if (K == 0) K = n;
  std::vector<double> cum(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) cum[i + 1] = cum[i] + f[i] * g.volume(i);
  const double total = cum[n];
  if (!(total > 0.0)) throw InvalidArgument("density_to_quantile: zero mass");

  QuantileRep q;
  q.X.resize(K);
  std::size_t i = 0;
  for (std::size_t k = 0; k < K; ++k) {
    const double m = (static_cast<double>(k) + 0.5) / static_cast<double>(K) * total;
    while (i + 1 < n && cum[i + 1] <= m) ++i;
    const double cell_mass = cum[i + 1] - cum[i];
    const double va = ball_volume(g.interface(i)), vb = ball_volume(g.interface(i + 1));
    const double t = cell_mass > 0.0 ? std::clamp((m - cum[i]) / cell_mass, 0.0, 1.0) : 0.0;
    q.X[k] = radius_of_volume(va + t * (vb - va));
  }
  return q;
}

/// Enclosed mass of the quantile measure at volume V (see file comment).
class QuantileCdf {
 public:
  explicit QuantileCdf(const QuantileRep& q) {
    if (q.size() < 2) throw InvalidArgument("quantile representation needs at least 2 points");
    if (!strictly_increasing_positive(q.X)) throw InvalidArgument("quantile radii must be positive and strictly increasing");
    const std::size_t K = q.size();
    const double dm = q.dm();
    vol_.reserve(K + 2);
    mass_.reserve(K + 2);
    vol_.push_back(0.0);
    mass_.push_back(0.0);
    for (std::size_t k = 0; k < K; ++k) {
      vol_.push_back(ball_volume(q.X[k]));
      mass_.push_back((static_cast<double>(k) + 0.5) * dm);
    }
    const double last_shell = vol_[K] - vol_[K - 1];
    vol_.push_back(vol_[K] + 0.5 * last_shell);
    mass_.push_back(1.0);
  }

  double operator()(double volume) const {
    if (volume <= 0.0) return 0.0;
    if (volume >= vol_.back()) return 1.0;
    const auto it = std::upper_bound(vol_.begin(), vol_.end(), volume);
    const std::size_t j = static_cast<std::size_t>(it - vol_.begin());
    const double t = (volume - vol_[j - 1]) / (vol_[j] - vol_[j - 1]);
    return mass_[j - 1] + t * (mass_[j] - mass_[j - 1]);
  }

  double support_radius() const { return radius_of_volume(vol_.back()); }

 private:
  std::vector<double> vol_;
  std::vector<double> mass_;
};

/// Cell averages of the quantile measure on `grid`.
inline Density<RadialGrid> quantile_to_density(const QuantileRep& q, const GridPtr<RadialGrid>& grid) {
  const QuantileCdf cdf(q);
  if (cdf.support_radius() > grid->r_max())
    throw DomainTooSmall("quantile_to_density: support extends beyond r_max");
  std::vector<double> v(grid->size());
  double prev = 0.0;
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const double next = cdf(ball_volume(grid->interface(i + 1)));
    v[i] = std::max(next - prev, 0.0) / grid->volume(i);
    prev = next;
  }
  return Density<RadialGrid>(grid, std::move(v));
}

/// W2 between two radial measures given by quantiles with equal K: the
/// optimal coupling is the monotone radial rearrangement.
inline double w2_quantiles(const QuantileRep& a, const QuantileRep& b) {
  if (a.size() != b.size()) throw InvalidArgument("w2_quantiles: quantile counts differ");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a.X[k] - b.X[k];
    s += d * d;
  }
  return std::sqrt(s * a.dm());
}

}  // namespace pnp
