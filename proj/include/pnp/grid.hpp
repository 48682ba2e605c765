#pragma once

// Spatial discretizations of R^3 (radial shells, uniform box), grid functions
// with cell-average semantics, and the discrete operators shared by solvers.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <istream>
#include <limits>
#include <memory>
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pnp/error.hpp"

namespace pnp {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm2(const Vec3& a) { return dot(a, a); }

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInfNorm = std::numeric_limits<double>::infinity();

/// Volume of the ball of radius r.
inline double ball_volume(double r) { return 4.0 * kPi / 3.0 * r * r * r; }

/// Uniform radial shells on [0, r_max]. Cell i spans [i*dr, (i+1)*dr] with its
/// center at (i + 1/2) dr; shell volumes are exact, not 4 pi r^2 dr.
class RadialGrid {
 public:
  static constexpr int dim = 1;
  static constexpr const char* kind = "radial";

  RadialGrid(std::size_t cell_count, double r_max) : n_(cell_count), r_max_(r_max) {
    if (cell_count == 0) throw InvalidArgument("RadialGrid: cell_count must be positive");
    if (!(r_max > 0.0) || !std::isfinite(r_max)) throw InvalidArgument("RadialGrid: r_max must be > 0");
    dr_ = r_max / static_cast<double>(n_);
    interfaces_.resize(n_ + 1);
    for (std::size_t i = 0; i <= n_; ++i) interfaces_[i] = static_cast<double>(i) * dr_;
    interfaces_[n_] = r_max;
    centers_.resize(n_);
    volumes_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      centers_[i] = (static_cast<double>(i) + 0.5) * dr_;
      const double a = interfaces_[i], b = interfaces_[i + 1];
      volumes_[i] = 4.0 * kPi / 3.0 * (b - a) * (b * b + a * b + a * a);
    }
  }

  std::size_t size() const { return n_; }
  double r_max() const { return r_max_; }
  double extent() const { return r_max_; }
  double dr() const { return dr_; }
  double center(std::size_t i) const { return centers_[i]; }
  /// Radius of interface i, i in [0, size()].
  double interface(std::size_t i) const { return interfaces_[i]; }
  double volume(std::size_t i) const { return volumes_[i]; }
  double face_area(std::size_t i) const { return 4.0 * kPi * interfaces_[i] * interfaces_[i]; }
  double squared_radius(std::size_t i) const { return centers_[i] * centers_[i]; }
  const std::vector<double>& centers() const { return centers_; }
  const std::vector<double>& volumes() const { return volumes_; }

  friend bool operator==(const RadialGrid& a, const RadialGrid& b) {
    return a.n_ == b.n_ && a.r_max_ == b.r_max_;
  }

 private:
  std::size_t n_;
  double r_max_;
  double dr_;
  std::vector<double> interfaces_;
  std::vector<double> centers_;
  std::vector<double> volumes_;
};

/// Uniform cube [-R, R)^3 with n cells per axis (n a power of two), indexed
/// x-fastest.
class BoxGrid3 {
 public:
  static constexpr int dim = 3;
  static constexpr const char* kind = "box3";

  BoxGrid3(std::size_t n_per_axis, double half_width) : n_(n_per_axis), half_width_(half_width) {
    if (n_ < 2 || (n_ & (n_ - 1)) != 0)
      throw InvalidArgument("BoxGrid3: n_per_axis must be a power of two >= 2");
    if (!(half_width > 0.0) || !std::isfinite(half_width))
      throw InvalidArgument("BoxGrid3: half_width must be > 0");
    h_ = 2.0 * half_width / static_cast<double>(n_);
  }

  std::size_t n() const { return n_; }
  std::size_t size() const { return n_ * n_ * n_; }
  double half_width() const { return half_width_; }
  double extent() const { return half_width_; }
  double h() const { return h_; }
  double volume(std::size_t) const { return h_ * h_ * h_; }
  double coordinate(std::size_t i) const { return -half_width_ + (static_cast<double>(i) + 0.5) * h_; }
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return i + n_ * (j + n_ * k); }
  std::array<std::size_t, 3> unpack(std::size_t idx) const {
    return {idx % n_, (idx / n_) % n_, idx / (n_ * n_)};
  }
  Vec3 point(std::size_t idx) const {
    const auto [i, j, k] = unpack(idx);
    return {coordinate(i), coordinate(j), coordinate(k)};
  }
  double squared_radius(std::size_t idx) const { return norm2(point(idx)); }

  friend bool operator==(const BoxGrid3& a, const BoxGrid3& b) {
    return a.n_ == b.n_ && a.half_width_ == b.half_width_;
  }

 private:
  std::size_t n_;
  double half_width_;
  double h_;
};

template <class G>
using GridPtr = std::shared_ptr<const G>;

template <class G, class... Args>
GridPtr<G> make_grid(Args&&... args) {
  return std::make_shared<const G>(std::forward<Args>(args)...);
}

template <class G>
bool same_grid(const G& a, const G& b) {
  return &a == &b || a == b;
}

namespace detail {

template <class G>
GridPtr<G> require_grid(GridPtr<G> grid) {
  if (!grid) throw InvalidArgument("grid function constructed without a grid");
  return grid;
}

inline void require_size(std::size_t expected, std::size_t got) {
  if (expected != got) throw InvalidArgument("grid function size does not match grid");
}

}  // namespace detail

/// Real-valued grid function (potential, chemical potential, charge).
template <class G>
class ScalarField {
 public:
  using grid_type = G;

  explicit ScalarField(GridPtr<G> grid)
      : grid_(detail::require_grid(std::move(grid))), values_(grid_->size(), 0.0) {}
  ScalarField(GridPtr<G> grid, std::vector<double> values)
      : grid_(detail::require_grid(std::move(grid))), values_(std::move(values)) {
    detail::require_size(grid_->size(), values_.size());
  }

  const G& grid() const { return *grid_; }
  const GridPtr<G>& grid_ptr() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }

 private:
  GridPtr<G> grid_;
  std::vector<double> values_;
};

/// Nonnegative cell-average concentration. Nonnegativity is checked on
/// construction; unit mass is established by `normalized`.
template <class G>
class Density {
 public:
  using grid_type = G;

  explicit Density(GridPtr<G> grid)
      : grid_(detail::require_grid(std::move(grid))), values_(grid_->size(), 0.0) {}
  Density(GridPtr<G> grid, std::vector<double> values)
      : grid_(detail::require_grid(std::move(grid))), values_(std::move(values)) {
    detail::require_size(grid_->size(), values_.size());
    for (double x : values_)
      if (!(x >= 0.0) || !std::isfinite(x))
        throw InvalidArgument("Density: values must be finite and nonnegative");
  }

  /// Rescales to unit mass; throws if the input carries no mass.
  static Density normalized(GridPtr<G> grid, std::vector<double> values);

  const G& grid() const { return *grid_; }
  const GridPtr<G>& grid_ptr() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

  ScalarField<G> as_field() const { return ScalarField<G>(grid_, values_); }

 private:
  GridPtr<G> grid_;
  std::vector<double> values_;
};

/// Cell-centered vector samples; radial grids carry the single component d/dr.
template <class G>
struct VectorField {
  GridPtr<G> grid;
  std::vector<std::array<double, G::dim>> values;
};

// ---------------------------------------------------------------------------
// Integrals and norms. All reductions run left to right in index order.

template <class G>
double integrate(const G& grid, std::span<const double> values) {
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += values[i] * grid.volume(i);
  return s;
}

template <class G>
double mass(const Density<G>& f) {
  return integrate(f.grid(), f.values());
}

template <class G>
double mass(const ScalarField<G>& f) {
  return integrate(f.grid(), f.values());
}

template <class G>
Density<G> Density<G>::normalized(GridPtr<G> grid, std::vector<double> values) {
  Density d(std::move(grid), std::move(values));
  const double m = mass(d);
  if (!(m > 0.0)) throw InvalidArgument("Density::normalized: zero mass");
  for (double& x : d.values_) x /= m;
  return d;
}

template <class G>
double second_moment(const Density<G>& f) {
  const G& g = f.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += g.squared_radius(i) * f[i] * g.volume(i);
  return s;
}

/// Weighted l^p norm; p must be 1, 2, 3 or kInfNorm.
template <class G>
double lp_norm(const G& grid, std::span<const double> values, double p) {
  if (p == kInfNorm) {
    double m = 0.0;
    for (double x : values) m = std::max(m, std::abs(x));
    return m;
  }
  if (p != 1.0 && p != 2.0 && p != 3.0) throw InvalidArgument("lp_norm: p must be 1, 2, 3 or infinity");
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double a = std::abs(values[i]);
    const double ap = p == 1.0 ? a : (p == 2.0 ? a * a : a * a * a);
    s += ap * grid.volume(i);
  }
  if (p == 1.0) return s;
  return p == 2.0 ? std::sqrt(s) : std::cbrt(s);
}

template <class F>
double lp_norm(const F& f, double p) {
  return lp_norm(f.grid(), f.values(), p);
}

template <class G>
double inner_product(const G& grid, std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i] * grid.volume(i);
  return s;
}

/// ||f - g||_2 for two grid functions on the same grid.
template <class F>
double l2_distance(const F& f, const F& g) {
  if (!same_grid(f.grid(), g.grid())) throw GridMismatch();
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double d = f[i] - g[i];
    s += d * d * f.grid().volume(i);
  }
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Gradient: central differences in the interior, one-sided at the boundary.

inline VectorField<RadialGrid> gradient(const ScalarField<RadialGrid>& f) {
  const RadialGrid& g = f.grid();
  const std::size_t n = g.size();
  if (n < 3) throw InvalidArgument("gradient: need at least 3 cells");
  std::vector<std::array<double, 1>> out(n);
  const double dr = g.dr();
  out[0] = {(f[1] - f[0]) / dr};
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = {(f[i + 1] - f[i - 1]) / (2.0 * dr)};
  out[n - 1] = {(f[n - 1] - f[n - 2]) / dr};
  return {f.grid_ptr(), std::move(out)};
}

inline VectorField<BoxGrid3> gradient(const ScalarField<BoxGrid3>& f) {
  const BoxGrid3& g = f.grid();
  const std::size_t n = g.n();
  if (n < 3) throw InvalidArgument("gradient: need at least 3 cells per axis");
  const double h = g.h();
  std::vector<std::array<double, 3>> out(g.size());
  const std::array<std::size_t, 3> stride{1, n, n * n};
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const auto ijk = g.unpack(idx);
    for (int a = 0; a < 3; ++a) {
      const std::size_t s = stride[a];
      if (ijk[a] == 0)
        out[idx][a] = (f[idx + s] - f[idx]) / h;
      else if (ijk[a] == n - 1)
        out[idx][a] = (f[idx] - f[idx - s]) / h;
      else
        out[idx][a] = (f[idx + s] - f[idx - s]) / (2.0 * h);
    }
  }
  return {f.grid_ptr(), std::move(out)};
}

// ---------------------------------------------------------------------------
// Support diagnostics.

/// True when every cell in the outer `fraction` of the domain (by radius for
/// radial grids, by distance to the box faces otherwise) is at most `threshold`.
inline bool boundary_decay_ok(const RadialGrid& g, std::span<const double> values, double fraction = 0.05,
                              double threshold = 1e-8) {
  const std::size_t n = g.size();
  const std::size_t first = n - std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * n)));
  for (std::size_t i = first; i < n; ++i)
    if (std::abs(values[i]) > threshold) return false;
  return true;
}

inline bool boundary_decay_ok(const BoxGrid3& g, std::span<const double> values, double fraction = 0.05,
                              double threshold = 1e-8) {
  const std::size_t n = g.n();
  const std::size_t layer = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * n)));
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const auto ijk = g.unpack(idx);
    bool outer = false;
    for (std::size_t c : ijk) outer = outer || c < layer || c >= n - layer;
    if (outer && std::abs(values[idx]) > threshold) return false;
  }
  return true;
}

template <class G>
bool check_boundary_decay(const Density<G>& f, const char* what, double fraction = 0.05,
                          double threshold = 1e-8) {
  const bool ok = boundary_decay_ok(f.grid(), f.values(), fraction, threshold);
  if (!ok) {
    std::ostringstream os;
    os << what << ": density exceeds " << threshold << " in the outer " << fraction * 100
       << "% of the domain; enlarge the domain";
    warn(os.str());
  }
  return ok;
}

// ---------------------------------------------------------------------------
// Constructors for common profiles.

/// Unit-mass uniform ball of radius R, exact shell overlaps.
inline Density<RadialGrid> uniform_ball(const GridPtr<RadialGrid>& grid, double radius) {
  std::vector<double> v(grid->size(), 0.0);
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const double a = grid->interface(i), b = std::min(grid->interface(i + 1), radius);
    if (b > a) v[i] = (ball_volume(b) - ball_volume(a)) / grid->volume(i);
  }
  return Density<RadialGrid>::normalized(grid, std::move(v));
}

/// Unit-mass uniform ball on a box grid; covered fractions from 4^3 subsamples
/// per cell.
inline Density<BoxGrid3> uniform_ball(const GridPtr<BoxGrid3>& grid, double radius, const Vec3& center = {}) {
  constexpr int sub = 4;
  const double h = grid->h();
  std::vector<double> v(grid->size(), 0.0);
  for (std::size_t idx = 0; idx < grid->size(); ++idx) {
    const Vec3 x = grid->point(idx);
    int hits = 0;
    for (int a = 0; a < sub; ++a)
      for (int b = 0; b < sub; ++b)
        for (int c = 0; c < sub; ++c) {
          const Vec3 y{x[0] - center[0] + ((a + 0.5) / sub - 0.5) * h, x[1] - center[1] + ((b + 0.5) / sub - 0.5) * h,
                       x[2] - center[2] + ((c + 0.5) / sub - 0.5) * h};
          if (norm2(y) < radius * radius) ++hits;
        }
    v[idx] = static_cast<double>(hits) / (sub * sub * sub);
  }
  return Density<BoxGrid3>::normalized(grid, std::move(v));
}

template <class Fn>
ScalarField<RadialGrid> sample(const GridPtr<RadialGrid>& grid, Fn&& fn) {
  std::vector<double> v(grid->size());
  for (std::size_t i = 0; i < grid->size(); ++i) v[i] = fn(grid->center(i));
  return ScalarField<RadialGrid>(grid, std::move(v));
}

template <class Fn>
ScalarField<BoxGrid3> sample(const GridPtr<BoxGrid3>& grid, Fn&& fn) {
  std::vector<double> v(grid->size());
  for (std::size_t i = 0; i < grid->size(); ++i) v[i] = fn(grid->point(i));
  return ScalarField<BoxGrid3>(grid, std::move(v));
}

/// Extends a radial grid function to the box by linear interpolation in r
/// (constant inside the first center, zero beyond r_max).
inline std::vector<double> radial_to_box_values(const RadialGrid& rg, std::span<const double> values,
                                                const BoxGrid3& box) {
  std::vector<double> out(box.size(), 0.0);
  const double dr = rg.dr();
  const std::size_t n = rg.size();
  for (std::size_t idx = 0; idx < box.size(); ++idx) {
    const double r = std::sqrt(box.squared_radius(idx));
    if (r >= rg.r_max()) continue;
    const double s = r / dr - 0.5;
    if (s <= 0.0) {
      out[idx] = values[0];
    } else if (s >= static_cast<double>(n - 1)) {
      out[idx] = values[n - 1];
    } else {
      const auto i = static_cast<std::size_t>(s);
      const double t = s - static_cast<double>(i);
      out[idx] = (1.0 - t) * values[i] + t * values[i + 1];
    }
  }
  return out;
}

inline Density<BoxGrid3> radial_to_box(const Density<RadialGrid>& f, const GridPtr<BoxGrid3>& box) {
  return Density<BoxGrid3>(box, radial_to_box_values(f.grid(), f.values(), *box));
}

// ---------------------------------------------------------------------------
// Snapshot files: `# key=value` header lines then one value per line.

struct Snapshot {
  std::string kind;
  std::size_t n = 0;
  double extent = 0.0;
  double time = 0.0;
  std::vector<double> values;
};

template <class F>
void write_snapshot(std::ostream& os, const F& f, double time) {
  using G = typename F::grid_type;
  const G& g = f.grid();
  std::size_t n;
  if constexpr (G::dim == 1)
    n = g.size();
  else
    n = g.n();
  os << "# kind=" << G::kind << '\n' << "# n=" << n << '\n';
  os << std::setprecision(17) << "# extent=" << g.extent() << '\n' << "# time=" << time << '\n';
  for (double x : f.values()) os << x << '\n';
}

inline Snapshot read_snapshot(std::istream& is) {
  Snapshot s;
  std::string line;
  bool have_kind = false, have_n = false, have_extent = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      const std::string value = line.substr(eq + 1);
      if (key == "kind") {
        s.kind = value;
        have_kind = true;
      } else if (key == "n") {
        s.n = std::stoul(value);
        have_n = true;
      } else if (key == "extent") {
        s.extent = std::stod(value);
        have_extent = true;
      } else if (key == "time") {
        s.time = std::stod(value);
      }
      continue;
    }
    s.values.push_back(std::stod(line));
  }
  if (!have_kind || !have_n || !have_extent) throw InvalidArgument("snapshot: missing header line");
  if (s.kind != "radial" && s.kind != "box3") throw InvalidArgument("snapshot: unknown kind '" + s.kind + "'");
  const std::size_t expected = s.kind == "radial" ? s.n : s.n * s.n * s.n;
  if (s.values.size() != expected) throw InvalidArgument("snapshot: value count does not match header");
  return s;
}

}  // namespace pnp
