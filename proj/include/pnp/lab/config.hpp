#pragma once

// Line-oriented `key = value` configuration with [section] headers. Every
// key must belong to the schema below; anything else is a ConfigError that
// names the offending key.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pnp/error.hpp"
#include "pnp/evolve_fv.hpp"
#include "pnp/grid.hpp"
#include "pnp/jko.hpp"
#include "pnp/model.hpp"
#include "pnp/potentials.hpp"
#include "pnp/steady_state.hpp"

namespace pnp::lab {

class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

namespace config_detail {

struct Entry {
  const char* key;
  const char* default_value;
};

// clang-format off
inline const std::vector<std::pair<std::string, std::vector<Entry>>>& schema() {
  static const std::vector<std::pair<std::string, std::vector<Entry>>> s = {
    {"grid", {{"mode", "radial"}, {"cells", "512"}, {"extent", "4"}, {"box_cells", "64"},
              {"init_u_radius", "2"}, {"init_v_radius", "2"},
              {"init_u_center", "0,0,0"}, {"init_v_center", "0,0,0"}}},
    {"potential.u", {{"kind", "quadratic"}, {"lambda0", "1"}, {"weights", "1,1,1"}, {"center", "0,0,0"},
                     {"amplitude", "0"}, {"wavevector", "0,0,0"}}},
    {"potential.v", {{"kind", "quadratic"}, {"lambda0", "1"}, {"weights", "1,1,1"}, {"center", "0,0,0"},
                     {"amplitude", "0"}, {"wavevector", "0,0,0"}}},
    {"coupling", {{"epsilon", "0"}}},
    {"steady", {{"tolerance", "1e-10"}, {"max_iterations", "500"}, {"damping", "0.5"},
                {"bisection_tolerance", "1e-14"}, {"certificate_samples", "1000"}}},
    {"fv", {{"dt", "0"}, {"cfl_safety", "0.9"}, {"t_end", "3"}, {"sample_every", "100"},
            {"sample_interval", "0.05"}, {"reconstruction", "muscl"}, {"snapshot_times", ""}}},
    {"jko", {{"tau", "1e-2"}, {"steps", "300"}, {"optimizer_tolerance", "1e-8"},
             {"max_inner_iterations", "200"}, {"K", "0"}, {"snapshot_times", ""}}},
    {"verify", {{"seed", "12345"}, {"experiments", "all"}, {"output_dir", ""}, {"cross_cells", "1024"},
                {"box_cells", "64"}, {"box_extent", "4"}, {"box_t_end", "0.5"}, {"fv_steps", "10000"},
                {"uniqueness_t_end", "10"}, {"inject_steady_scale", "1"}}},
  };
  return s;
}
// clang-format on

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace config_detail

class Config {
 public:
  /// All schema keys at their defaults.
  Config() {
    for (const auto& [section, entries] : config_detail::schema())
      for (const auto& e : entries) values_[section + "." + e.key] = e.default_value;
  }

  static Config parse(std::istream& is, const std::string& source = "<config>") {
    Config c;
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find_first_of("#;");
      if (hash != std::string::npos) line.erase(hash);
      line = config_detail::trim(line);
      if (line.empty()) continue;
      const std::string where = source + ":" + std::to_string(lineno);
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError(where + ": malformed section header '" + line + "'");
        section = config_detail::trim(line.substr(1, line.size() - 2));
        if (!c.known_section(section)) throw ConfigError(where + ": unknown section [" + section + "]");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
      if (section.empty()) throw ConfigError(where + ": key outside of any section");
      const std::string key = config_detail::trim(line.substr(0, eq));
      const std::string value = config_detail::trim(line.substr(eq + 1));
      try {
        c.set(section + "." + key, value);
      } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
      }
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    return parse(is, path);
  }

  /// Sets `section.key`; unknown keys are errors.
  void set(const std::string& dotted, const std::string& value) {
    if (!values_.count(dotted)) throw ConfigError("unknown config key '" + dotted + "'");
    values_[dotted] = value;
  }

  const std::string& str(const std::string& dotted) const {
    const auto it = values_.find(dotted);
    if (it == values_.end()) throw ConfigError("unknown config key '" + dotted + "'");
    return it->second;
  }

  double num(const std::string& dotted) const {
    const std::string& s = str(dotted);
    char* end = nullptr;
    const double x = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) throw ConfigError("key '" + dotted + "': '" + s + "' is not a number");
    return x;
  }

  long integer(const std::string& dotted) const {
    const std::string& s = str(dotted);
    long x = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || p != s.data() + s.size())
      throw ConfigError("key '" + dotted + "': '" + s + "' is not an integer");
    return x;
  }

  Vec3 vec3(const std::string& dotted) const {
    const std::string& s = str(dotted);
    std::stringstream ss(s);
    std::string part;
    Vec3 v{};
    std::size_t i = 0;
    while (std::getline(ss, part, ',')) {
      if (i >= 3) break;
      part = config_detail::trim(part);
      char* end = nullptr;
      v[i] = std::strtod(part.c_str(), &end);
      if (part.empty() || end != part.c_str() + part.size()) break;
      ++i;
    }
    if (i != 3 || std::getline(ss, part, ',')) throw ConfigError("key '" + dotted + "': expected three comma-separated numbers, got '" + s + "'");
    return v;
  }

  /// Comma-separated list of nonnegative numbers; empty means none.
  std::vector<double> list(const std::string& dotted) const {
    const std::string& s = str(dotted);
    std::vector<double> out;
    if (config_detail::trim(s).empty()) return out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) {
      part = config_detail::trim(part);
      char* end = nullptr;
      const double x = std::strtod(part.c_str(), &end);
      if (part.empty() || end != part.c_str() + part.size() || !(x >= 0.0))
        throw ConfigError("key '" + dotted + "': expected comma-separated nonnegative numbers, got '" + s + "'");
      out.push_back(x);
    }
    return out;
  }

  bool known_section(const std::string& s) const {
    const auto& sch = config_detail::schema();
    return std::any_of(sch.begin(), sch.end(), [&](const auto& p) { return p.first == s; });
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// Builders. Conversion failures of individual keys surface as ConfigError.

template <class F>
auto checked(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

inline PotentialSpec potential_from(const Config& c, const std::string& species) {
  const std::string p = "potential." + species + ".";
  return checked("[potential." + species + "]", [&] {
    const std::string kind = c.str(p + "kind");
    if (kind == "quadratic") return PotentialSpec::quadratic(c.num(p + "lambda0"), c.vec3(p + "center"));
    if (kind == "anisotropic") return PotentialSpec::anisotropic(c.vec3(p + "weights"), c.vec3(p + "center"));
    if (kind == "perturbed")
      return PotentialSpec::perturbed(c.vec3(p + "weights"), c.num(p + "amplitude"), c.vec3(p + "wavevector"),
                                      c.vec3(p + "center"));
    throw ConfigError("key '" + p + "kind': unknown potential kind '" + kind + "'");
  });
}

inline CouplingParams coupling_from(const Config& c) {
  return checked("[coupling]", [&] { return CouplingParams(c.num("coupling.epsilon")); });
}

inline SteadySolverConfig steady_from(const Config& c) {
  SteadySolverConfig s;
  s.tolerance = c.num("steady.tolerance");
  s.max_iterations = static_cast<int>(c.integer("steady.max_iterations"));
  s.damping = c.num("steady.damping");
  s.bisection_tolerance = c.num("steady.bisection_tolerance");
  checked("[steady]", [&] { s.validate(); return 0; });
  return s;
}

inline FvConfig fv_from(const Config& c) {
  FvConfig f;
  f.dt = c.num("fv.dt");
  f.cfl_safety = c.num("fv.cfl_safety");
  f.t_end = c.num("fv.t_end");
  f.sample_every = static_cast<int>(c.integer("fv.sample_every"));
  f.sample_interval = c.num("fv.sample_interval");
  const std::string rec = c.str("fv.reconstruction");
  if (rec == "muscl") f.reconstruction = FaceReconstruction::Muscl;
  else if (rec == "upwind") f.reconstruction = FaceReconstruction::Upwind;
  else throw ConfigError("key 'fv.reconstruction': expected muscl or upwind, got '" + rec + "'");
  checked("[fv]", [&] { f.validate(); return 0; });
  return f;
}

inline JkoConfig jko_from(const Config& c) {
  JkoConfig j;
  j.tau = c.num("jko.tau");
  j.optimizer_tolerance = c.num("jko.optimizer_tolerance");
  j.max_inner_iterations = static_cast<int>(c.integer("jko.max_inner_iterations"));
  const long K = c.integer("jko.K");
  j.K = K > 0 ? static_cast<std::size_t>(K) : static_cast<std::size_t>(c.integer("grid.cells"));
  checked("[jko]", [&] { j.validate(); return 0; });
  return j;
}

inline bool radial_mode(const Config& c) {
  const std::string m = c.str("grid.mode");
  if (m == "radial") return true;
  if (m == "box3") return false;
  throw ConfigError("key 'grid.mode': expected radial or box3, got '" + m + "'");
}

inline GridPtr<RadialGrid> radial_grid_from(const Config& c) {
  return checked("[grid]", [&] {
    const long n = c.integer("grid.cells");
    if (n < 2) throw ConfigError("key 'grid.cells' must be >= 2");
    return make_grid<RadialGrid>(static_cast<std::size_t>(n), c.num("grid.extent"));
  });
}

inline GridPtr<BoxGrid3> box_grid_from(const Config& c) {
  return checked("[grid]", [&] {
    const long n = c.integer("grid.box_cells");
    if (n < 2) throw ConfigError("key 'grid.box_cells' must be >= 2");
    return make_grid<BoxGrid3>(static_cast<std::size_t>(n), c.num("grid.extent"));
  });
}

template <class G>
Model<G> model_from(const Config& c, GridPtr<G> grid) {
  return checked("[potential]", [&] {
    return Model<G>(std::move(grid), potential_from(c, "u"), potential_from(c, "v"), coupling_from(c));
  });
}

/// Initial data: uniform balls of the configured radii (centers apply in
/// box mode only).
inline std::pair<Density<RadialGrid>, Density<RadialGrid>> initial_from(const Config& c, const GridPtr<RadialGrid>& g) {
  return checked("[grid]", [&] {
    return std::make_pair(uniform_ball(g, c.num("grid.init_u_radius")), uniform_ball(g, c.num("grid.init_v_radius")));
  });
}

inline std::pair<Density<BoxGrid3>, Density<BoxGrid3>> initial_from(const Config& c, const GridPtr<BoxGrid3>& g) {
  return checked("[grid]", [&] {
    return std::make_pair(uniform_ball(g, c.num("grid.init_u_radius"), c.vec3("grid.init_u_center")),
                          uniform_ball(g, c.num("grid.init_v_radius"), c.vec3("grid.init_v_center")));
  });
}

}  // namespace pnp::lab
