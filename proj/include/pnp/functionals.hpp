#pragma once

// Energy E, auxiliary entropy L, dissipation D, Boltzmann entropy H and the
// radial Wasserstein distances, evaluated on grid densities.

#include <cmath>
#include <vector>

#include "pnp/error.hpp"
#include "pnp/grid.hpp"
#include "pnp/model.hpp"
#include "pnp/quantile.hpp"

namespace pnp {

struct EnergyBreakdown {
  double internal_u = 0.0;     // int u^2
  double internal_v = 0.0;     // int v^2
  double confinement_u = 0.0;  // int u U
  double confinement_v = 0.0;  // int v V
  double coupling = 0.0;       // eps/2 int |D psi|^2
  double total = 0.0;
};

template <class G>
EnergyBreakdown energy(const Density<G>& u, const Density<G>& v, const Model<G>& model) {
  if (!same_grid(u.grid(), v.grid()) || !same_grid(u.grid(), model.grid())) throw GridMismatch();
  const G& g = model.grid();
  EnergyBreakdown e;
  e.internal_u = inner_product(g, u.values(), u.values());
  e.internal_v = inner_product(g, v.values(), v.values());
  e.confinement_u = inner_product(g, u.values(), model.U_field().values());
  e.confinement_v = inner_product(g, v.values(), model.V_field().values());
  if (model.epsilon() != 0.0) e.coupling = 0.5 * model.epsilon() * model.poisson().dirichlet_energy(net_charge(u, v));
  e.total = e.internal_u + e.internal_v + e.confinement_u + e.confinement_v + e.coupling;
  return e;
}

/// The minimizer of E and its Euler-Lagrange data.
template <class G>
struct SteadyState {
  Density<G> u_inf;
  Density<G> v_inf;
  ScalarField<G> psi_inf;
  double C_u = 0.0;
  double C_v = 0.0;
  double epsilon = 0.0;
  EnergyBreakdown energy_at_steady;
  int iterations = 0;
  double residual_u = 0.0;  // sup |u_inf - 1/2 [C_u - U - eps psi_inf]_+|
  double residual_v = 0.0;
};

namespace detail {

template <class G>
void require_compatible(const Density<G>& u, const Density<G>& v, const SteadyState<G>& ss, const Model<G>& model) {
  if (!same_grid(u.grid(), v.grid()) || !same_grid(u.grid(), ss.u_inf.grid()) || !same_grid(u.grid(), model.grid()))
    throw GridMismatch();
  if (ss.epsilon != model.epsilon()) throw InvalidArgument("steady state was computed for a different epsilon");
}

}  // namespace detail

/// L(u,v) = int [u^2 - u_inf^2 + v^2 - v_inf^2 + (u - u_inf) U + (v - v_inf) V
///               + eps (u - u_inf) psi_inf - eps (v - v_inf) psi_inf].
template <class G>
double aux_entropy(const Density<G>& u, const Density<G>& v, const SteadyState<G>& ss, const Model<G>& model) {
  detail::require_compatible(u, v, ss, model);
  const G& g = model.grid();
  const double eps = model.epsilon();
  const auto& U = model.U_field();
  const auto& V = model.V_field();
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double du = u[i] - ss.u_inf[i], dv = v[i] - ss.v_inf[i];
    const double term = du * (u[i] + ss.u_inf[i]) + dv * (v[i] + ss.v_inf[i]) + du * U[i] + dv * V[i] +
                        eps * (du - dv) * ss.psi_inf[i];
    s += term * g.volume(i);
  }
  return s;
}

struct DissipationTerms {
  double value = 0.0;        // D
  double coercive_u = 0.0;   // int u |D(2u + U + eps psi_inf)|^2
  double coercive_v = 0.0;   // int v |D(2v + V - eps psi_inf)|^2
  double coercive = 0.0;     // coercive_u + coercive_v
  double coupling = 0.0;     // int (u + v) |D(psi - psi_inf)|^2
};

/// Face-based D: each face contributes area * distance * density * slope^2
/// with the density taken upwind of the velocity -slope. Upwinding makes D
/// vanish at a cutoff steady state (the empty side of a support edge feeds
/// the face) and equals the exact energy decay rate of the finite-volume
/// scheme at eps = 0.
template <class G>
DissipationTerms dissipation(const Density<G>& u, const Density<G>& v, const SteadyState<G>& ss,
                             const Model<G>& model) {
  detail::require_compatible(u, v, ss, model);
  const G& g = model.grid();
  const double eps = model.epsilon();
  const std::size_t n = u.size();
  std::vector<double> xi_u(n), xi_v(n), dpsi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    xi_u[i] = 2.0 * u[i] + model.U_field()[i] + eps * ss.psi_inf[i];
    xi_v[i] = 2.0 * v[i] + model.V_field()[i] - eps * ss.psi_inf[i];
  }
  if (eps != 0.0) {
    const ScalarField<G> psi = model.potential(u, v);
    for (std::size_t i = 0; i < n; ++i) dpsi[i] = psi[i] - ss.psi_inf[i];
  }
  DissipationTerms d;
  for_each_face(g, [&](std::size_t i, std::size_t j, double area, double dist) {
    const double w = area * dist;
    const double su = (xi_u[j] - xi_u[i]) / dist;
    const double sv = (xi_v[j] - xi_v[i]) / dist;
    d.coercive_u += w * (su > 0.0 ? u[j] : u[i]) * su * su;
    d.coercive_v += w * (sv > 0.0 ? v[j] : v[i]) * sv * sv;
    if (eps != 0.0) {
      const double sp = (dpsi[j] - dpsi[i]) / dist;
      d.coupling += w * 0.5 * (u[i] + v[i] + u[j] + v[j]) * sp * sp;
    }
  });
  d.coercive = d.coercive_u + d.coercive_v;
  d.value = (1.0 - 0.5 * eps) * d.coercive - 0.5 * eps * d.coupling;
  return d;
}

/// H(w) = int w log w with 0 log 0 = 0.
template <class G>
double boltzmann_entropy(const Density<G>& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] > 0.0) s += w[i] * std::log(w[i]) * w.grid().volume(i);
  return s;
}

/// Exact W2 between radial densities via monotone rearrangement of radii,
/// sampled at K = cell count quantiles.
inline double w2_radial(const Density<RadialGrid>& f, const Density<RadialGrid>& g) {
  if (!same_grid(f.grid(), g.grid())) throw GridMismatch();
  const double mf = mass(f), mg = mass(g);
  if (std::abs(mf - mg) > 1e-8) throw InvalidArgument("w2_radial: masses differ by more than 1e-8");
  return w2_quantiles(density_to_quantile(f), density_to_quantile(g));
}

/// d((u1,v1),(u2,v2)) = sqrt(W2(u1,u2)^2 + W2(v1,v2)^2).
inline double product_metric(const Density<RadialGrid>& u1, const Density<RadialGrid>& v1,
                             const Density<RadialGrid>& u2, const Density<RadialGrid>& v2) {
  const double a = w2_radial(u1, u2), b = w2_radial(v1, v2);
  return std::sqrt(a * a + b * b);
}

}  // namespace pnp
