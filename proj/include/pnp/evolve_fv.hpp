#pragma once

// Explicit upwind finite-volume integrator for
//   d_t u = div(u D(2u + U + eps psi)),  d_t v = div(v D(2v + V - eps psi)),
//   -Laplace psi = u - v.
// Face velocities are interface differences of the full chemical potential
// xi = 2u + U +- eps psi; the face flux carries the donor cell's density
// (first-order upwind or a minmod-limited MUSCL reconstruction). Updates are
// applied to cell masses so the total is conserved by telescoping. psi is
// held fixed during a step and refreshed after both species move.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <type_traits>
#include <vector>

#include "pnp/error.hpp"
#include "pnp/grid.hpp"
#include "pnp/model.hpp"

namespace pnp {

template <class G>
struct FvState {
  double t = 0.0;
  Density<G> u;
  Density<G> v;
  ScalarField<G> psi;
};

template <class G>
FvState<G> make_fv_state(Density<G> u, Density<G> v, const Model<G>& model, double t = 0.0) {
  ScalarField<G> psi = model.epsilon() != 0.0 ? model.potential(u, v) : ScalarField<G>(model.grid_ptr());
  return {t, std::move(u), std::move(v), std::move(psi)};
}

enum class FaceReconstruction { Upwind, Muscl };

struct FvConfig {
  double dt = 0.0;            // fixed step; 0 selects the stable step each time
  double cfl_safety = 0.9;
  double t_end = 1.0;
  int sample_every = 100;     // steps between samples when sample_interval == 0
  double sample_interval = 0; // > 0: sample at multiples of this time, landing steps on them
  FaceReconstruction reconstruction = FaceReconstruction::Muscl;

  void validate() const {
    if (dt < 0.0 || !std::isfinite(dt)) throw InvalidArgument("fv: dt must be >= 0");
    if (!(cfl_safety > 0.0 && cfl_safety < 1.0)) throw InvalidArgument("fv: cfl_safety must lie in (0, 1)");
    if (!(t_end >= 0.0)) throw InvalidArgument("fv: t_end must be >= 0");
    if (sample_every < 1) throw InvalidArgument("fv: sample_every must be positive");
    if (sample_interval < 0.0) throw InvalidArgument("fv: sample_interval must be >= 0");
  }
};

namespace detail {

template <class G>
std::vector<double> chemical_potential(const Density<G>& w, const ScalarField<G>& confinement, double eps_signed,
                                       const ScalarField<G>& psi) {
  std::vector<double> xi(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) xi[i] = 2.0 * w[i] + confinement[i] + eps_signed * psi[i];
  return xi;
}

inline double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return a > 0.0 ? std::min(a, b) : std::max(a, b);
}

/// Density carried through face (i, j) by velocity w, taken from the donor
/// cell. MUSCL uses the minmod-limited linear reconstruction of the donor,
/// which lies in [0, 2 u_donor] and vanishes when the donor is empty.
template <class G>
double face_density(const G& g, const Density<G>& u, std::size_t i, std::size_t j, double w, FaceReconstruction rec) {
  const bool forward = w > 0.0;
  const std::size_t donor = forward ? i : j;
  if (rec == FaceReconstruction::Upwind) return u[donor];
  const FaceStencil st = face_stencil(g, i, j);
  if (forward) {
    if (st.before_i == FaceStencil::npos) return u[i];
    return u[i] + 0.5 * minmod(u[i] - u[st.before_i], u[j] - u[i]);
  }
  if (st.after_j == FaceStencil::npos) return u[j];
  return u[j] - 0.5 * minmod(u[j] - u[i], u[st.after_j] - u[j]);
}

/// Face fluxes area * w * density of one species, in for_each_face order,
/// plus the total outflow of every cell.
template <class G>
struct FaceFluxes {
  std::vector<double> flux;
  std::vector<double> outflow;
  double max_speed = 0.0;
};

template <class G>
FaceFluxes<G> face_fluxes(const G& g, const Density<G>& u, const std::vector<double>& xi, FaceReconstruction rec) {
  FaceFluxes<G> f;
  f.outflow.assign(u.size(), 0.0);
  for_each_face(g, [&](std::size_t i, std::size_t j, double area, double d) {
    const double w = -(xi[j] - xi[i]) / d;
    const double F = area * w * face_density(g, u, i, j, w, rec);
    f.flux.push_back(F);
    f.max_speed = std::max(f.max_speed, std::abs(w));
    (F > 0.0 ? f.outflow[i] : f.outflow[j]) += std::abs(F);
  });
  return f;
}

template <class G>
double min_face_distance(const G& g) {
  if constexpr (std::is_same_v<G, RadialGrid>) return g.dr();
  else return g.h();
}

}  // namespace detail

/// Face velocities -(xi_j - xi_i)/d of species u, in for_each_face order.
template <class G>
std::vector<double> velocity_u(const FvState<G>& s, const Model<G>& model) {
  const auto xi = detail::chemical_potential(s.u, model.U_field(), model.epsilon(), s.psi);
  std::vector<double> out;
  for_each_face(model.grid(), [&](std::size_t i, std::size_t j, double, double d) { out.push_back(-(xi[j] - xi[i]) / d); });
  return out;
}

template <class G>
std::vector<double> velocity_v(const FvState<G>& s, const Model<G>& model) {
  const auto xi = detail::chemical_potential(s.v, model.V_field(), -model.epsilon(), s.psi);
  std::vector<double> out;
  for_each_face(model.grid(), [&](std::size_t i, std::size_t j, double, double d) { out.push_back(-(xi[j] - xi[i]) / d); });
  return out;
}

namespace detail {

template <class G>
double stable_bound(const G& g, const Density<G>& u, const Density<G>& v, const FaceFluxes<G>& fu,
                    const FaceFluxes<G>& fv) {
  const double d = min_face_distance(g);
  const double max_w = std::max(fu.max_speed, fv.max_speed);
  double max_density = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) max_density = std::max({max_density, u[i], v[i]});
  double bound = std::numeric_limits<double>::infinity();
  if (max_w > 0.0) bound = std::min(bound, d / max_w);
  if (max_density > 0.0) bound = std::min(bound, d * d / (4.0 * 2.0 * max_density));
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (fu.outflow[i] > 0.0) bound = std::min(bound, g.volume(i) * u[i] / fu.outflow[i]);
    if (fv.outflow[i] > 0.0) bound = std::min(bound, g.volume(i) * v[i] / fv.outflow[i]);
  }
  return bound;
}

}  // namespace detail

/// Largest admissible step: cfl_safety times the minimum of the advective
/// bound d / max|w|, the degenerate-diffusion bound d^2 / (4 max 2u) and the
/// per-cell outflow bound vol_i u_i / outflow_i that guarantees positivity.
template <class G>
double stable_time_step(const FvState<G>& s, const Model<G>& model, double cfl_safety,
                        FaceReconstruction rec = FaceReconstruction::Muscl) {
  const G& g = model.grid();
  const double eps = model.epsilon();
  const auto fu = detail::face_fluxes(g, s.u, detail::chemical_potential(s.u, model.U_field(), eps, s.psi), rec);
  const auto fv = detail::face_fluxes(g, s.v, detail::chemical_potential(s.v, model.V_field(), -eps, s.psi), rec);
  return cfl_safety * detail::stable_bound(g, s.u, s.v, fu, fv);
}

/// One explicit step of length dt. Throws CflViolation (carrying the
/// admissible step) when dt exceeds stable_time_step.
template <class G>
FvState<G> step(const FvState<G>& s, double dt, const Model<G>& model, double cfl_safety = 0.9,
                FaceReconstruction rec = FaceReconstruction::Muscl) {
  const G& g = model.grid();
  const double eps = model.epsilon();
  const auto fu = detail::face_fluxes(g, s.u, detail::chemical_potential(s.u, model.U_field(), eps, s.psi), rec);
  const auto fv = detail::face_fluxes(g, s.v, detail::chemical_potential(s.v, model.V_field(), -eps, s.psi), rec);
  const double allowed = cfl_safety * detail::stable_bound(g, s.u, s.v, fu, fv);
  if (!(dt > 0.0) || dt > allowed) {
    std::ostringstream os;
    os << "fv step rejected: dt = " << dt << " exceeds the stable step " << allowed;
    throw CflViolation(os.str(), allowed);
  }
  const std::size_t n = s.u.size();
  std::vector<double> mu(n), mv(n);
  for (std::size_t i = 0; i < n; ++i) {
    mu[i] = s.u[i] * g.volume(i);
    mv[i] = s.v[i] * g.volume(i);
  }
  std::size_t f = 0;
  for_each_face(g, [&](std::size_t i, std::size_t j, double, double) {
    const double a = dt * fu.flux[f], b = dt * fv.flux[f];
    ++f;
    mu[i] -= a;
    mu[j] += a;
    mv[i] -= b;
    mv[j] += b;
  });
  for (std::size_t i = 0; i < n; ++i) {
    mu[i] /= g.volume(i);
    mv[i] /= g.volume(i);
  }
  Density<G> u(s.u.grid_ptr(), std::move(mu));
  Density<G> v(s.v.grid_ptr(), std::move(mv));
  return make_fv_state(std::move(u), std::move(v), model, s.t + dt);
}

template <class G>
using FvObserver = std::function<void(const FvState<G>&, long step_index)>;

/// Steps until t_end, calling `observe` on the initial state and at every
/// sample (every sample_every steps, or at multiples of sample_interval) and
/// on the final state.
template <class G>
FvState<G> evolve(FvState<G> state, const FvConfig& cfg, const Model<G>& model, const std::type_identity_t<FvObserver<G>>& observe = {}) {
  cfg.validate();
  check_boundary_decay(state.u, "fv initial u");
  check_boundary_decay(state.v, "fv initial v");
  long k = 0;
  if (observe) observe(state, k);
  double next_sample = cfg.sample_interval > 0.0 ? state.t + cfg.sample_interval : 0.0;
  const double t_tol = 1e-12 * std::max(1.0, cfg.t_end);
  bool last_observed = true;
  while (state.t < cfg.t_end - t_tol) {
    double dt = cfg.dt > 0.0 ? cfg.dt : stable_time_step(state, model, cfg.cfl_safety, cfg.reconstruction);
    dt = std::min(dt, cfg.t_end - state.t);
    bool hits_sample = false;
    if (cfg.sample_interval > 0.0 && state.t + dt >= next_sample - t_tol) {
      dt = next_sample - state.t;
      hits_sample = true;
    }
    FvState<G> next = step(state, dt, model, cfg.cfl_safety, cfg.reconstruction);
    if (hits_sample) {
      next.t = next_sample;
      next_sample += cfg.sample_interval;
    }
    state = std::move(next);
    ++k;
    const bool sample = cfg.sample_interval > 0.0 ? hits_sample : (k % cfg.sample_every == 0);
    last_observed = sample;
    if (sample && observe) observe(state, k);
  }
  if (!last_observed && observe) observe(state, k);
  check_boundary_decay(state.u, "fv final u");
  check_boundary_decay(state.v, "fv final v");
  return state;
}

}  // namespace pnp
