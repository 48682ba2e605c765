#pragma once

// Free-space Poisson problems -Laplace(psi) = w, psi = G * w with Newton's
// kernel G(x) = 1/(4 pi |x|).
//
// Radial mode places the charge of cell i on the sphere through its center
// r_i. Then psi_i = (1/4pi) [Q_i / r_i + sum_{j>i} q_j / r_j] with Q_i the
// charge on spheres up to and including i, the field between consecutive
// centers is Q/(4 pi r^2), and the Dirichlet energy is the exact integral of
// Q(r)^2/(4 pi r^2) over the piecewise-constant enclosed charge. With this
// placement  sum psi_i q_i  and the gradient form of the energy agree to
// rounding.
//
// Box mode convolves with point samples of G (the origin entry is the exact
// cell average of G over the central cube), zero-padded to 2n per axis.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <vector>

#include "pnp/error.hpp"
#include "pnp/grid.hpp"

namespace pnp {

// ---------------------------------------------------------------------------
// Radial mode

struct RadialPoissonSolution {
  ScalarField<RadialGrid> psi;
  /// Net charge enclosed by interface i (i in [0, n]).
  std::vector<double> enclosed_charge;
  /// Radial field Q(r)/(4 pi r^2) at interface i; zero at the origin.
  std::vector<double> field;
};

inline RadialPoissonSolution solve_radial(const ScalarField<RadialGrid>& charge) {
  const RadialGrid& g = charge.grid();
  const std::size_t n = g.size();
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = charge[i] * g.volume(i);

  std::vector<double> enclosed(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) enclosed[i + 1] = enclosed[i] + q[i];

  std::vector<double> field(n + 1, 0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    const double r = g.interface(i);
    field[i] = enclosed[i] / (4.0 * kPi * r * r);
  }

  const double outer = std::abs(q[n - 1]);
  if (outer > 1e-8) warn("solve_radial: charge in the outermost shell exceeds 1e-8; exterior assumed empty");

  std::vector<double> psi(n);
  psi[n - 1] = enclosed[n] / (4.0 * kPi * g.center(n - 1));
  for (std::size_t i = n - 1; i-- > 0;) {
    psi[i] = psi[i + 1] + enclosed[i + 1] / (4.0 * kPi) * (1.0 / g.center(i) - 1.0 / g.center(i + 1));
  }
  return {ScalarField<RadialGrid>(charge.grid_ptr(), std::move(psi)), std::move(enclosed), std::move(field)};
}

template <class G>
ScalarField<G> net_charge(const Density<G>& u, const Density<G>& v) {
  if (!same_grid(u.grid(), v.grid())) throw GridMismatch();
  std::vector<double> w(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) w[i] = u[i] - v[i];
  return ScalarField<G>(u.grid_ptr(), std::move(w));
}

inline RadialPoissonSolution solve_radial(const Density<RadialGrid>& u, const Density<RadialGrid>& v) {
  return solve_radial(net_charge(u, v));
}

/// (1/4pi) int_0^inf Q(r)^2 / r^2 dr with Q piecewise constant between cell
/// centers (and equal to the total charge beyond the last center).
inline double dirichlet_energy(const ScalarField<RadialGrid>& charge) {
  const RadialGrid& g = charge.grid();
  const std::size_t n = g.size();
  double enclosed = 0.0, s = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    enclosed += charge[i] * g.volume(i);
    s += enclosed * enclosed * (1.0 / g.center(i) - 1.0 / g.center(i + 1));
  }
  enclosed += charge[n - 1] * g.volume(n - 1);
  s += enclosed * enclosed / g.center(n - 1);
  return s / (4.0 * kPi);
}

inline double dirichlet_energy(const Density<RadialGrid>& u, const Density<RadialGrid>& v) {
  return dirichlet_energy(net_charge(u, v));
}

/// int |D psi|^2 from interface differences of a computed potential. Face
/// weights 4 pi r_i r_{i+1} dr, exterior tail 4 pi r_{n-1} psi_{n-1}^2.
inline double dirichlet_energy_from_gradient(const ScalarField<RadialGrid>& psi) {
  const RadialGrid& g = psi.grid();
  const std::size_t n = g.size();
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double ri = g.center(i), rj = g.center(i + 1), d = rj - ri;
    const double slope = (psi[i + 1] - psi[i]) / d;
    s += slope * slope * 4.0 * kPi * ri * rj * d;
  }
  s += 4.0 * kPi * g.center(n - 1) * psi[n - 1] * psi[n - 1];
  return s;
}

/// Potential of a piecewise-constant radial charge evaluated exactly at any
/// radius (continuous in r, with continuous first derivative).
class RadialPotentialProfile {
 public:
  explicit RadialPotentialProfile(const ScalarField<RadialGrid>& charge) : grid_(charge.grid_ptr()) {
    const std::size_t n = grid_->size();
    rho_.assign(charge.values().begin(), charge.values().end());
    enclosed_.assign(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) enclosed_[i + 1] = enclosed_[i] + rho_[i] * grid_->volume(i);
    tail_.assign(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) {
      const double a = grid_->interface(i), b = grid_->interface(i + 1);
      tail_[i] = tail_[i + 1] + rho_[i] * 0.5 * (b * b - a * a);
    }
  }

  double value(double r) const {
    const std::size_t n = grid_->size();
    if (r >= grid_->r_max()) return enclosed_[n] / (4.0 * kPi * r);
    const std::size_t i = cell(r);
    const double b = grid_->interface(i + 1);
    const double q = enclosed_at(i, r);
    const double inner = r > 0.0 ? q / (4.0 * kPi * r) : 0.0;
    return inner + rho_[i] * 0.5 * (b * b - r * r) + tail_[i + 1];
  }

  double derivative(double r) const {
    if (r <= 0.0) return 0.0;
    const std::size_t n = grid_->size();
    const double q = r >= grid_->r_max() ? enclosed_[n] : enclosed_at(cell(r), r);
    return -q / (4.0 * kPi * r * r);
  }

  double second_derivative(double r) const {
    const std::size_t n = grid_->size();
    if (r <= 0.0) return -rho_[0] / 3.0;
    if (r >= grid_->r_max()) return 2.0 * enclosed_[n] / (4.0 * kPi * r * r * r);
    const std::size_t i = cell(r);
    return -rho_[i] + 2.0 * enclosed_at(i, r) / (4.0 * kPi * r * r * r);
  }

  double sup_abs_second_derivative() const {
    double m = 0.0;
    for (std::size_t i = 0; i <= grid_->size(); ++i) {
      const double r = grid_->interface(i);
      m = std::max(m, std::abs(second_derivative(r)));
      if (i > 0) m = std::max(m, std::abs(second_derivative(r - 1e-12 * grid_->dr())));
    }
    return m;
  }

 private:
  std::size_t cell(double r) const {
    const auto i = static_cast<std::size_t>(r / grid_->dr());
    return std::min(i, grid_->size() - 1);
  }
  double enclosed_at(std::size_t i, double r) const {
    return enclosed_[i] + rho_[i] * (ball_volume(r) - ball_volume(grid_->interface(i)));
  }

  GridPtr<RadialGrid> grid_;
  std::vector<double> rho_;
  std::vector<double> enclosed_;
  std::vector<double> tail_;
};

// ---------------------------------------------------------------------------
// Box mode

/// int over [-1/2,1/2]^3 of 1/|x| dx = 3 ln(2 + sqrt 3) - pi/2.
inline double unit_cube_inverse_distance_integral() {
  return 3.0 * std::log(2.0 + std::sqrt(3.0)) - kPi / 2.0;
}

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwDeleter>;

template <class T>
FftwBuffer<T> fftw_alloc(std::size_t count) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * count));
  if (!p) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

}  // namespace detail

/// Newton kernel on the doubled, zero-padded grid, kept in Fourier space.
class GreensKernel3 {
 public:
  explicit GreensKernel3(GridPtr<BoxGrid3> grid) : grid_(std::move(grid)) {
    const std::size_t n = grid_->n();
    m_ = 2 * n;
    const double h = grid_->h();
    origin_value_ = unit_cube_inverse_distance_integral() / (4.0 * kPi * h);

    const std::size_t real_count = m_ * m_ * m_;
    const std::size_t complex_count = m_ * m_ * (m_ / 2 + 1);
    auto real = detail::fftw_alloc<double>(real_count);
    auto spec = detail::fftw_alloc<fftw_complex>(complex_count);
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      const int mm = static_cast<int>(m_);
      forward_ = fftw_plan_dft_r2c_3d(mm, mm, mm, real.get(), spec.get(), FFTW_ESTIMATE);
      backward_ = fftw_plan_dft_c2r_3d(mm, mm, mm, spec.get(), real.get(), FFTW_ESTIMATE);
    }
    // Row-major (z, y, x) with x fastest, matching BoxGrid3 ordering.
    for (std::size_t c = 0; c < m_; ++c)
      for (std::size_t b = 0; b < m_; ++b)
        for (std::size_t a = 0; a < m_; ++a) real[a + m_ * (b + m_ * c)] = sample(offset(a), offset(b), offset(c));
    fftw_execute_dft_r2c(forward_, real.get(), spec.get());
    kernel_hat_.resize(complex_count);
    for (std::size_t i = 0; i < complex_count; ++i) kernel_hat_[i] = {spec[i][0], spec[i][1]};
  }

  GreensKernel3(const GreensKernel3&) = delete;
  GreensKernel3& operator=(const GreensKernel3&) = delete;

  ~GreensKernel3() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  const BoxGrid3& grid() const { return *grid_; }
  const GridPtr<BoxGrid3>& grid_ptr() const { return grid_; }
  double origin_value() const { return origin_value_; }

  /// Kernel entry at integer cell offset (di, dj, dk).
  double sample(long di, long dj, long dk) const {
    if (di == 0 && dj == 0 && dk == 0) return origin_value_;
    const double h = grid_->h();
    const double r = h * std::sqrt(static_cast<double>(di * di + dj * dj + dk * dk));
    return 1.0 / (4.0 * kPi * r);
  }

  /// psi_i = sum_j K(i - j) w_j h^3 as a free-space (non-periodic) sum.
  ScalarField<BoxGrid3> convolve(const ScalarField<BoxGrid3>& w) const {
    if (!same_grid(w.grid(), *grid_)) throw GridMismatch();
    const std::size_t n = grid_->n();
    const std::size_t real_count = m_ * m_ * m_;
    const std::size_t complex_count = m_ * m_ * (m_ / 2 + 1);
    auto real = detail::fftw_alloc<double>(real_count);
    auto spec = detail::fftw_alloc<fftw_complex>(complex_count);
    std::fill(real.get(), real.get() + real_count, 0.0);
    const double h3 = grid_->volume(0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) real[i + m_ * (j + m_ * k)] = w[grid_->index(i, j, k)] * h3;
    fftw_execute_dft_r2c(forward_, real.get(), spec.get());
    for (std::size_t i = 0; i < complex_count; ++i) {
      const std::complex<double> z = std::complex<double>(spec[i][0], spec[i][1]) * kernel_hat_[i];
      spec[i][0] = z.real();
      spec[i][1] = z.imag();
    }
    fftw_execute_dft_c2r(backward_, spec.get(), real.get());
    const double scale = 1.0 / static_cast<double>(real_count);
    std::vector<double> psi(grid_->size());
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) psi[grid_->index(i, j, k)] = real[i + m_ * (j + m_ * k)] * scale;
    return ScalarField<BoxGrid3>(grid_, std::move(psi));
  }

 private:
  long offset(std::size_t a) const {
    return a < m_ / 2 ? static_cast<long>(a) : static_cast<long>(a) - static_cast<long>(m_);
  }

  GridPtr<BoxGrid3> grid_;
  std::size_t m_ = 0;
  double origin_value_ = 0.0;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
  std::vector<std::complex<double>> kernel_hat_;
};

/// Free-space potential of the charge w on the box. Warns (does not fail)
/// when w has not decayed to 1e-8 in the outer 10% of the box.
inline ScalarField<BoxGrid3> solve_box3(const ScalarField<BoxGrid3>& w, const GreensKernel3& kernel) {
  if (!boundary_decay_ok(w.grid(), w.values(), 0.10, 1e-8))
    warn("solve_box3: charge has not decayed to 1e-8 in the outer 10% of the box");
  return kernel.convolve(w);
}

/// sum psi w h^3 using the identity int |D(G*w)|^2 = int (G*w) w.
inline double dirichlet_energy(const ScalarField<BoxGrid3>& charge, const GreensKernel3& kernel) {
  const ScalarField<BoxGrid3> psi = kernel.convolve(charge);
  return inner_product(charge.grid(), psi.values(), charge.values());
}

inline double dirichlet_energy(const Density<BoxGrid3>& u, const Density<BoxGrid3>& v, const GreensKernel3& kernel) {
  return dirichlet_energy(net_charge(u, v), kernel);
}

/// Interface-difference form of int |D psi|^2 over the box (no exterior part).
inline double dirichlet_energy_from_gradient(const ScalarField<BoxGrid3>& psi) {
  const BoxGrid3& g = psi.grid();
  const std::size_t n = g.n();
  const double h = g.h();
  const std::array<std::size_t, 3> stride{1, n, n * n};
  double s = 0.0;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const auto ijk = g.unpack(idx);
    for (int a = 0; a < 3; ++a) {
      if (ijk[a] + 1 >= n) continue;
      const double d = (psi[idx + stride[a]] - psi[idx]) / h;
      s += d * d * h * h * h;
    }
  }
  return s;
}

/// Uniform front end over the two Poisson modes.
template <class G>
class PoissonSolver;

template <>
class PoissonSolver<RadialGrid> {
 public:
  explicit PoissonSolver(GridPtr<RadialGrid> grid) : grid_(std::move(grid)) {}
  ScalarField<RadialGrid> solve(const ScalarField<RadialGrid>& w) const { return solve_radial(w).psi; }
  double dirichlet_energy(const ScalarField<RadialGrid>& w) const { return pnp::dirichlet_energy(w); }

 private:
  GridPtr<RadialGrid> grid_;
};

template <>
class PoissonSolver<BoxGrid3> {
 public:
  explicit PoissonSolver(GridPtr<BoxGrid3> grid) : kernel_(std::make_shared<const GreensKernel3>(std::move(grid))) {}
  ScalarField<BoxGrid3> solve(const ScalarField<BoxGrid3>& w) const { return solve_box3(w, *kernel_); }
  double dirichlet_energy(const ScalarField<BoxGrid3>& w) const { return pnp::dirichlet_energy(w, *kernel_); }
  const GreensKernel3& kernel() const { return *kernel_; }

 private:
  std::shared_ptr<const GreensKernel3> kernel_;
};

}  // namespace pnp
