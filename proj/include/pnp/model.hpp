#pragma once

// A discretized problem instance: grid, confinement potentials sampled at
// cell centers, coupling strength and the matching Poisson solver.

#include <cmath>
#include <memory>
#include <sstream>

#include "pnp/error.hpp"
#include "pnp/grid.hpp"
#include "pnp/poisson.hpp"
#include "pnp/potentials.hpp"

namespace pnp {

struct CouplingParams {
  double epsilon = 0.0;

  CouplingParams() = default;
  explicit CouplingParams(double eps) : epsilon(eps) {
    if (!std::isfinite(eps) || eps < 0.0) throw InvalidArgument("coupling: epsilon must be finite and >= 0");
    if (eps > 0.5) {
      std::ostringstream os;
      os << "coupling epsilon = " << eps << " is outside the small-coupling regime (> 0.5)";
      warn(os.str());
    }
  }
};

template <class G>
class Model {
 public:
  Model(GridPtr<G> grid, PotentialSpec U, PotentialSpec V, CouplingParams coupling)
      : grid_(std::move(grid)),
        U_(U),
        V_(V),
        coupling_(coupling),
        U_field_(sample_potential(grid_, U_)),
        V_field_(sample_potential(grid_, V_)),
        poisson_(std::make_shared<const PoissonSolver<G>>(grid_)) {}

  /// Same grid, potentials and Poisson solver, different coupling.
  Model with_epsilon(double eps) const {
    Model m(*this);
    m.coupling_ = CouplingParams(eps);
    return m;
  }

  const G& grid() const { return *grid_; }
  const GridPtr<G>& grid_ptr() const { return grid_; }
  const PotentialSpec& U() const { return U_; }
  const PotentialSpec& V() const { return V_; }
  const ScalarField<G>& U_field() const { return U_field_; }
  const ScalarField<G>& V_field() const { return V_field_; }
  double epsilon() const { return coupling_.epsilon; }
  const CouplingParams& coupling() const { return coupling_; }
  const PoissonSolver<G>& poisson() const { return *poisson_; }
  double lambda0() const { return std::min(U_.lambda0(), V_.lambda0()); }

  /// psi = G * (u - v).
  ScalarField<G> potential(const Density<G>& u, const Density<G>& v) const {
    return poisson_->solve(net_charge(u, v));
  }

 private:
  GridPtr<G> grid_;
  PotentialSpec U_;
  PotentialSpec V_;
  CouplingParams coupling_;
  ScalarField<G> U_field_;
  ScalarField<G> V_field_;
  std::shared_ptr<const PoissonSolver<G>> poisson_;
};

// ---------------------------------------------------------------------------
// Faces between neighboring cells: fn(i, j, area, distance) with j the
// neighbor in the positive direction. Domain boundary faces are omitted
// (no-flux).

template <class Fn>
void for_each_face(const RadialGrid& g, Fn&& fn) {
  const double dr = g.dr();
  for (std::size_t i = 0; i + 1 < g.size(); ++i) fn(i, i + 1, g.face_area(i + 1), dr);
}

template <class Fn>
void for_each_face(const BoxGrid3& g, Fn&& fn) {
  const std::size_t n = g.n();
  const double h = g.h(), area = h * h;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t idx = g.index(i, j, k);
        if (i + 1 < n) fn(idx, idx + 1, area, h);
        if (j + 1 < n) fn(idx, idx + n, area, h);
        if (k + 1 < n) fn(idx, idx + n * n, area, h);
      }
}

// Outer neighbors across a face (i, j): the cell before i and the cell after
// j along the same axis, or npos at the domain edge.
struct FaceStencil {
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t before_i = npos;
  std::size_t after_j = npos;
};

inline FaceStencil face_stencil(const RadialGrid& g, std::size_t i, std::size_t j) {
  FaceStencil s;
  if (i > 0) s.before_i = i - 1;
  if (j + 1 < g.size()) s.after_j = j + 1;
  return s;
}

inline FaceStencil face_stencil(const BoxGrid3& g, std::size_t i, std::size_t j) {
  const std::size_t n = g.n(), stride = j - i;
  const std::size_t axis_i = stride == 1 ? i % n : stride == n ? (i / n) % n : i / (n * n);
  FaceStencil s;
  if (axis_i > 0) s.before_i = i - stride;
  if (axis_i + 2 < n) s.after_j = j + stride;
  return s;
}

}  // namespace pnp
