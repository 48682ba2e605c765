#pragma once

// Per-sample diagnostics of a trajectory and their CSV form.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "pnp/error.hpp"
#include "pnp/evolve_fv.hpp"
#include "pnp/functionals.hpp"
#include "pnp/jko.hpp"
#include "pnp/poisson.hpp"
#include "pnp/quantile.hpp"

namespace pnp::lab {

struct DiagnosticsRecord {
  double t = 0.0;
  EnergyBreakdown energy;
  double aux_entropy = 0.0;
  double dissipation = 0.0;
  double coercive_integral = 0.0;
  double coercive_u = 0.0;  // not a CSV column; feeds l3_ratio_u
  double coercive_v = 0.0;
  double mass_u = 0.0, mass_v = 0.0;
  double l2_dist_u = 0.0, l2_dist_v = 0.0;
  std::optional<double> w2_dist_u, w2_dist_v;
  double min_u = 0.0, min_v = 0.0;
  double psi_sup = 0.0;
  double l3_ratio_u = 0.0, l3_ratio_v = 0.0;
  std::optional<double> fint_slack;
};

inline double min_value(std::span<const double> x) {
  double m = std::numeric_limits<double>::infinity();
  for (double a : x) m = std::min(m, a);
  return m;
}

template <class G>
double l3_ratio(const Density<G>& w, double coercive) {
  const double n3 = lp_norm(w.grid(), w.values(), 3.0);
  return n3 * n3 * n3 * n3 / (1.0 + coercive);
}

/// Record of an Eulerian state against the steady state of the same model.
template <class G>
DiagnosticsRecord record_from_state(double t, const Density<G>& u, const Density<G>& v, const ScalarField<G>& psi,
                                    const SteadyState<G>& ss, const Model<G>& model) {
  DiagnosticsRecord r;
  r.t = t;
  r.energy = energy(u, v, model);
  r.aux_entropy = aux_entropy(u, v, ss, model);
  const DissipationTerms d = dissipation(u, v, ss, model);
  r.dissipation = d.value;
  r.coercive_integral = d.coercive;
  r.coercive_u = d.coercive_u;
  r.coercive_v = d.coercive_v;
  r.mass_u = mass(u);
  r.mass_v = mass(v);
  r.l2_dist_u = l2_distance(u, ss.u_inf);
  r.l2_dist_v = l2_distance(v, ss.v_inf);
  if constexpr (std::is_same_v<G, RadialGrid>) {
    r.w2_dist_u = w2_quantiles(density_to_quantile(u), density_to_quantile(ss.u_inf));
    r.w2_dist_v = w2_quantiles(density_to_quantile(v), density_to_quantile(ss.v_inf));
  }
  r.min_u = min_value(u.values());
  r.min_v = min_value(v.values());
  r.psi_sup = lp_norm(psi.grid(), psi.values(), kInfNorm);
  r.l3_ratio_u = l3_ratio(u, d.coercive_u);
  r.l3_ratio_v = l3_ratio(v, d.coercive_v);
  return r;
}

template <class G>
DiagnosticsRecord record_from_state(const FvState<G>& s, const SteadyState<G>& ss, const Model<G>& model) {
  if (model.epsilon() == 0.0) return record_from_state(s.t, s.u, s.v, model.potential(s.u, s.v), ss, model);
  return record_from_state(s.t, s.u, s.v, s.psi, ss, model);
}

/// Record of a JKO iterate. Energy, L, D and the slack are the quantile
/// discretizations the scheme is built on; distances refer to the scheme's
/// own minimizer (reconstructed on the grid for l2, in quantiles for W2).
inline DiagnosticsRecord record_from_jko(const JkoSample& s, const Model<RadialGrid>& model,
                                         const JkoLyapunov& lyapunov) {
  DiagnosticsRecord r;
  r.t = s.t;
  r.energy = s.energy;
  r.aux_entropy = s.aux_entropy;
  r.dissipation = s.dissipation.value;
  r.coercive_integral = s.dissipation.coercive;
  r.coercive_u = s.dissipation.coercive_u;
  r.coercive_v = s.dissipation.coercive_v;
  r.fint_slack = s.fint_slack;
  const auto& g = model.grid_ptr();
  const auto u = quantile_to_density(s.state->u, g), v = quantile_to_density(s.state->v, g);
  const auto u_ref = quantile_to_density(lyapunov.minimizer().u, g);
  const auto v_ref = quantile_to_density(lyapunov.minimizer().v, g);
  r.mass_u = mass(u);
  r.mass_v = mass(v);
  r.l2_dist_u = l2_distance(u, u_ref);
  r.l2_dist_v = l2_distance(v, v_ref);
  r.w2_dist_u = w2_quantiles(s.state->u, lyapunov.minimizer().u);
  r.w2_dist_v = w2_quantiles(s.state->v, lyapunov.minimizer().v);
  r.min_u = min_value(u.values());
  r.min_v = min_value(v.values());
  const auto psi = solve_radial(u, v).psi;
  r.psi_sup = lp_norm(psi.grid(), psi.values(), kInfNorm);
  r.l3_ratio_u = l3_ratio(u, r.coercive_u);
  r.l3_ratio_v = l3_ratio(v, r.coercive_v);
  return r;
}

// ---------------------------------------------------------------------------
// CSV

struct CsvLayout {
  bool radial = true;  // w2 columns
  bool jko = false;    // fint_slack column
};

inline std::vector<std::string> csv_columns(const CsvLayout& layout) {
  std::vector<std::string> c = {"t",           "energy_total", "internal_u",        "internal_v", "confinement_u",
                                "confinement_v", "coupling",   "aux_entropy",       "dissipation", "coercive_integral",
                                "mass_u",      "mass_v",       "l2_dist_u",         "l2_dist_v"};
  if (layout.radial) {
    c.push_back("w2_dist_u");
    c.push_back("w2_dist_v");
  }
  for (const char* s : {"min_u", "min_v", "psi_sup", "l3_ratio_u", "l3_ratio_v"}) c.push_back(s);
  if (layout.jko) c.push_back("fint_slack");
  return c;
}

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string csv_row(const DiagnosticsRecord& r, const CsvLayout& layout) {
  std::vector<double> v = {r.t,
                           r.energy.total,
                           r.energy.internal_u,
                           r.energy.internal_v,
                           r.energy.confinement_u,
                           r.energy.confinement_v,
                           r.energy.coupling,
                           r.aux_entropy,
                           r.dissipation,
                           r.coercive_integral,
                           r.mass_u,
                           r.mass_v,
                           r.l2_dist_u,
                           r.l2_dist_v};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (layout.radial) {
    v.push_back(r.w2_dist_u.value_or(nan));
    v.push_back(r.w2_dist_v.value_or(nan));
  }
  for (double x : {r.min_u, r.min_v, r.psi_sup, r.l3_ratio_u, r.l3_ratio_v}) v.push_back(x);
  if (layout.jko) v.push_back(r.fint_slack.value_or(nan));
  std::string line;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) line += ',';
    line += format_double(v[i]);
  }
  line += '\n';
  return line;
}

/// Writes the header on open; every row goes out in one write followed by a
/// flush, so an interrupted run leaves only whole rows.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, CsvLayout layout) : layout_(layout), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("cannot open " + path + " for writing");
    std::string header;
    const auto cols = csv_columns(layout_);
    for (std::size_t i = 0; i < cols.size(); ++i) header += (i ? "," : "") + cols[i];
    header += '\n';
    emit(header);
  }

  void write(const DiagnosticsRecord& r) { emit(csv_row(r, layout_)); }

 private:
  void emit(const std::string& line) {
    out_.write(line.data(), static_cast<std::streamsize>(line.size()));
    out_.flush();
    if (!out_) throw Error("write to diagnostics CSV failed");
  }

  CsvLayout layout_;
  std::ofstream out_;
};

/// A CSV read back by column name.
struct CsvTable {
  std::vector<std::string> columns;
  std::map<std::string, std::vector<double>> data;

  const std::vector<double>& column(const std::string& name) const {
    const auto it = data.find(name);
    if (it == data.end()) throw InvalidArgument("CSV has no column '" + name + "'");
    return it->second;
  }
  bool has(const std::string& name) const { return data.count(name) != 0; }
  std::size_t rows() const { return data.empty() ? 0 : data.begin()->second.size(); }
};

inline CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw InvalidArgument("empty CSV");
  {
    std::stringstream ss(line);
    std::string name;
    while (std::getline(ss, name, ',')) {
      t.columns.push_back(name);
      t.data[name];
    }
  }
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c >= t.columns.size()) throw InvalidArgument("CSV row " + std::to_string(row) + " has too many fields");
      char* end = nullptr;
      const double x = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw InvalidArgument("CSV row " + std::to_string(row) + ": bad number '" + cell + "'");
      t.data[t.columns[c++]].push_back(x);
    }
    if (c != t.columns.size()) throw InvalidArgument("CSV row " + std::to_string(row) + " has too few fields");
  }
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot open " + path);
  return read_csv(is);
}

}  // namespace pnp::lab
