#pragma once

// Steady state of the coupled system as the fixed point of
//   u = 1/2 [C_u - U - eps psi]_+ ,  v = 1/2 [C_v - V + eps psi]_+ ,
//   psi = G * (u - v),
// with C_u, C_v fixed by unit mass. Damped Picard iteration on psi.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <utility>

#include "pnp/error.hpp"
#include "pnp/functionals.hpp"
#include "pnp/grid.hpp"
#include "pnp/model.hpp"

namespace pnp {

struct SteadySolverConfig {
  double tolerance = 1e-10;
  int max_iterations = 500;
  double damping = 0.5;
  double bisection_tolerance = 1e-14;

  void validate() const {
    if (!(tolerance >= 1e-14)) throw InvalidArgument("steady: tolerance must be >= 1e-14");
    if (!(bisection_tolerance >= 1e-14)) throw InvalidArgument("steady: bisection_tolerance must be >= 1e-14");
    if (!(damping > 0.0 && damping <= 1.0)) throw InvalidArgument("steady: damping must lie in (0, 1]");
    if (max_iterations < 1) throw InvalidArgument("steady: max_iterations must be positive");
  }
};

template <class G>
struct CutoffProfile {
  double C;
  Density<G> density;
};

template <class G>
double cutoff_mass(const ScalarField<G>& a, double C) {
  const G& g = a.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (C > a[i]) s += 0.5 * (C - a[i]) * g.volume(i);
  return s;
}

/// Finds C with mass(1/2 [C - a]_+) = target by bisection on [min a, max a].
/// Throws DomainTooSmall when even C = max a does not reach the target.
template <class G>
CutoffProfile<G> normalize_cutoff(const ScalarField<G>& a, double target_mass, double bisection_tolerance = 1e-14) {
  if (target_mass < 0.0) throw InvalidArgument("normalize_cutoff: negative target mass");
  const auto [lo_it, hi_it] = std::minmax_element(a.values().begin(), a.values().end());
  double lo = *lo_it, hi = *hi_it;
  double C = lo;
  if (target_mass > 0.0) {
    if (cutoff_mass(a, hi) < target_mass) {
      std::ostringstream os;
      os << "normalize_cutoff: mass " << target_mass << " unreachable on the truncated domain; enlarge it";
      throw DomainTooSmall(os.str());
    }
    for (int it = 0; it < 400; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double m = cutoff_mass(a, mid);
      if (std::abs(m - target_mass) <= bisection_tolerance * std::max(1.0, target_mass)) {
        lo = hi = mid;
        break;
      }
      (m < target_mass ? lo : hi) = mid;
    }
    C = 0.5 * (lo + hi);
  }
  std::vector<double> w(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) w[i] = C > a[i] ? 0.5 * (C - a[i]) : 0.0;
  return {C, Density<G>(a.grid_ptr(), std::move(w))};
}

namespace detail {

template <class G>
ScalarField<G> shifted(const ScalarField<G>& base, double eps, const ScalarField<G>& psi) {
  std::vector<double> out(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) out[i] = base[i] + eps * psi[i];
  return ScalarField<G>(base.grid_ptr(), std::move(out));
}

template <class G>
double sup_change(const Density<G>& a, const Density<G>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

template <class G>
double cutoff_residual(const Density<G>& w, double C, const ScalarField<G>& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) m = std::max(m, std::abs(w[i] - 0.5 * std::max(C - a[i], 0.0)));
  return m;
}

template <class G>
SteadyState<G> picard(const Model<G>& model, const SteadySolverConfig& cfg, Density<G> u, Density<G> v,
                      double damping) {
  const double eps = model.epsilon();
  ScalarField<G> psi_damped = model.potential(u, v);
  double C_u = 0.0, C_v = 0.0, change = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < cfg.max_iterations && !(change < cfg.tolerance); ++it) {
    if (it > 0 || eps != 0.0) {
      const ScalarField<G> psi = model.potential(u, v);
      if (it > 0)
        for (std::size_t i = 0; i < psi.size(); ++i)
          psi_damped[i] = (1.0 - damping) * psi_damped[i] + damping * psi[i];
      else
        psi_damped = psi;
    }
    auto cu = normalize_cutoff(shifted(model.U_field(), eps, psi_damped), 1.0, cfg.bisection_tolerance);
    auto cv = normalize_cutoff(shifted(model.V_field(), -eps, psi_damped), 1.0, cfg.bisection_tolerance);
    change = std::max(sup_change(cu.density, u), sup_change(cv.density, v));
    C_u = cu.C;
    C_v = cv.C;
    u = std::move(cu.density);
    v = std::move(cv.density);
  }
  if (!(change < cfg.tolerance)) {
    std::ostringstream os;
    os << "steady state: no convergence after " << cfg.max_iterations << " iterations (last change " << change << ")";
    throw NonConvergence(os.str(), change);
  }
  ScalarField<G> psi = model.potential(u, v);
  SteadyState<G> ss{u, v, psi, C_u, C_v, eps, {}, it, 0.0, 0.0};
  ss.residual_u = cutoff_residual(ss.u_inf, C_u, shifted(model.U_field(), eps, psi));
  ss.residual_v = cutoff_residual(ss.v_inf, C_v, shifted(model.V_field(), -eps, psi));
  ss.energy_at_steady = energy(ss.u_inf, ss.v_inf, model);
  return ss;
}

}  // namespace detail

/// Solves for (u_inf, v_inf, psi_inf). The default initial guess is the
/// decoupled (eps = 0) pair of cutoff profiles. On nonconvergence one retry
/// is made at half the damping.
template <class G>
SteadyState<G> solve_steady(const Model<G>& model, const SteadySolverConfig& cfg,
                            std::optional<std::pair<Density<G>, Density<G>>> initial = std::nullopt) {
  cfg.validate();
  if (!initial) {
    auto u0 = normalize_cutoff(model.U_field(), 1.0, cfg.bisection_tolerance).density;
    auto v0 = normalize_cutoff(model.V_field(), 1.0, cfg.bisection_tolerance).density;
    initial.emplace(std::move(u0), std::move(v0));
  }
  SteadyState<G> ss = [&] {
    try {
      return detail::picard(model, cfg, initial->first, initial->second, cfg.damping);
    } catch (const NonConvergence&) {
      return detail::picard(model, cfg, initial->first, initial->second, 0.5 * cfg.damping);
    }
  }();
  check_boundary_decay(ss.u_inf, "steady state u_inf");
  check_boundary_decay(ss.v_inf, "steady state v_inf");
  return ss;
}

}  // namespace pnp
