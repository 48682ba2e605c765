// pnp_lab: command-line front end of the simulator and verification lab.
//
//   pnp_lab steady      --config FILE [--epsilon X] [--out DIR]
//   pnp_lab evolve-fv   --config FILE [--epsilon X] [--out DIR]
//   pnp_lab evolve-jko  --config FILE [--epsilon X] [--tau X] [--steps N] [--out DIR]
//   pnp_lab verify      --config FILE [--seed N] [--out DIR]
//   pnp_lab report      CSV [--config FILE]
//
// Exit status: 0 on success, 2 on a malformed config or command line, 1 on
// any other failure; verify exits 1 when an asserted certificate fails.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pnp/evolve_fv.hpp"
#include "pnp/jko.hpp"
#include "pnp/lab/config.hpp"
#include "pnp/lab/diagnostics.hpp"
#include "pnp/lab/report.hpp"
#include "pnp/lab/suite.hpp"
#include "pnp/steady_state.hpp"

namespace fs = std::filesystem;
using namespace pnp;
using namespace pnp::lab;

namespace {

struct Options {
  std::string config;
  std::optional<std::string> epsilon, tau, steps, seed;
  std::vector<std::string> overrides;
  std::string out = "pnp_out";
  std::string csv;
};

Config load_config(const Options& o) {
  Config c = o.config.empty() ? Config() : Config::load(o.config);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    c.set(config_detail::trim(kv.substr(0, eq)), config_detail::trim(kv.substr(eq + 1)));
  }
  if (o.epsilon) c.set("coupling.epsilon", *o.epsilon);
  if (o.tau) c.set("jko.tau", *o.tau);
  if (o.steps) c.set("jko.steps", *o.steps);
  if (o.seed) c.set("verify.seed", *o.seed);
  return c;
}

fs::path output_dir(const Options& o) {
  fs::create_directories(o.out);
  return o.out;
}

template <class F>
void write_snapshot_file(const fs::path& p, const F& f, double t) {
  std::ofstream os(p);
  if (!os) throw Error("cannot write " + p.string());
  write_snapshot(os, f, t);
}

std::string time_tag(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", t);
  return buf;
}

// --- steady -----------------------------------------------------------------

template <class G>
int steady_for(const Config& c, GridPtr<G> grid, const Options& o) {
  const Model<G> m = model_from(c, std::move(grid));
  const SteadyState<G> ss = solve_steady(m, steady_from(c));
  const fs::path dir = output_dir(o);
  write_snapshot_file(dir / "u_inf.snap", ss.u_inf, 0.0);
  write_snapshot_file(dir / "v_inf.snap", ss.v_inf, 0.0);
  std::ostringstream s;
  s << std::setprecision(10);
  s << "epsilon = " << ss.epsilon << '\n'
    << "C_u = " << ss.C_u << '\n'
    << "C_v = " << ss.C_v << '\n'
    << "psi_inf_sup = " << lp_norm(ss.psi_inf.grid(), ss.psi_inf.values(), kInfNorm) << '\n'
    << "iterations = " << ss.iterations << '\n'
    << "residual_u = " << ss.residual_u << '\n'
    << "residual_v = " << ss.residual_v << '\n'
    << "energy = " << ss.energy_at_steady.total << '\n';
  std::ofstream(dir / "steady_summary.txt") << s.str();
  std::cout << s.str();
  return 0;
}

int cmd_steady(const Options& o) {
  const Config c = load_config(o);
  if (radial_mode(c)) return steady_for(c, radial_grid_from(c), o);
  return steady_for(c, box_grid_from(c), o);
}

// --- evolve-fv --------------------------------------------------------------

bool due(std::vector<double>& times, double t) {
  const double tol = 1e-9 * std::max(1.0, t);
  const auto it = std::find_if(times.begin(), times.end(), [&](double s) { return std::abs(s - t) <= tol; });
  if (it == times.end()) return false;
  times.erase(it);
  return true;
}

template <class G>
int fv_for(const Config& c, GridPtr<G> grid, const Options& o) {
  const Model<G> m = model_from(c, grid);
  const FvConfig cfg = fv_from(c);
  std::vector<double> snaps = c.list("fv.snapshot_times");
  const auto [u0, v0] = initial_from(c, grid);
  const SteadyState<G> ss = solve_steady(m, steady_from(c));
  const fs::path dir = output_dir(o);
  CsvWriter csv((dir / "fv.csv").string(), {std::is_same_v<G, RadialGrid>, false});
  long rows = 0;
  const auto final_state = evolve(make_fv_state(u0, v0, m), cfg, m, [&](const FvState<G>& s, long) {
    csv.write(record_from_state(s, ss, m));
    ++rows;
    if (due(snaps, s.t)) {
      write_snapshot_file(dir / ("u_t" + time_tag(s.t) + ".snap"), s.u, s.t);
      write_snapshot_file(dir / ("v_t" + time_tag(s.t) + ".snap"), s.v, s.t);
    }
  });
  write_snapshot_file(dir / "u_final.snap", final_state.u, final_state.t);
  write_snapshot_file(dir / "v_final.snap", final_state.v, final_state.t);
  for (double t : snaps) std::cerr << "warning: snapshot time " << t << " is not a sample time; skipped\n";
  std::cout << "wrote " << rows << " rows to " << (dir / "fv.csv").string() << " (t_end = " << final_state.t << ")\n";
  return 0;
}

int cmd_fv(const Options& o) {
  const Config c = load_config(o);
  if (radial_mode(c)) return fv_for(c, radial_grid_from(c), o);
  return fv_for(c, box_grid_from(c), o);
}

// --- evolve-jko -------------------------------------------------------------

int cmd_jko(const Options& o) {
  const Config c = load_config(o);
  if (!radial_mode(c)) throw ConfigError("key 'grid.mode': evolve-jko requires radial mode");
  const auto grid = radial_grid_from(c);
  const Model<RadialGrid> m = model_from(c, grid);
  if (!m.U().is_radial() || !m.V().is_radial())
    throw ConfigError("[potential]: evolve-jko requires centered isotropic quadratic potentials");
  const JkoConfig cfg = jko_from(c);
  const long steps = c.integer("jko.steps");
  if (steps < 0) throw ConfigError("key 'jko.steps' must be >= 0");
  std::vector<double> snaps = c.list("jko.snapshot_times");
  const auto [u0, v0] = initial_from(c, grid);
  const SteadyState<RadialGrid> ss = solve_steady(m, steady_from(c));
  const JkoLyapunov ly(ss, m, cfg.K);
  const fs::path dir = output_dir(o);
  CsvWriter csv((dir / "jko.csv").string(), {true, true});
  double worst = -std::numeric_limits<double>::infinity();
  const QuantilePair last =
      jko_evolve(to_quantiles(u0, v0, cfg.K), cfg, m.epsilon(), m.U(), m.V(), static_cast<int>(steps), &ly,
                 [&](const JkoSample& s) {
                   const DiagnosticsRecord r = record_from_jko(s, m, ly);
                   csv.write(r);
                   worst = std::max(worst, s.fint_slack);
                   if (due(snaps, s.t)) {
                     write_snapshot_file(dir / ("u_t" + time_tag(s.t) + ".snap"), quantile_to_density(s.state->u, grid), s.t);
                     write_snapshot_file(dir / ("v_t" + time_tag(s.t) + ".snap"), quantile_to_density(s.state->v, grid), s.t);
                   }
                 });
  const double t_end = static_cast<double>(steps) * cfg.tau;
  write_snapshot_file(dir / "u_final.snap", quantile_to_density(last.u, grid), t_end);
  write_snapshot_file(dir / "v_final.snap", quantile_to_density(last.v, grid), t_end);
  for (double t : snaps) std::cerr << "warning: snapshot time " << t << " is not a step time; skipped\n";
  std::cout << "wrote " << steps << " rows to " << (dir / "jko.csv").string() << "; max fint_slack = " << worst << '\n';
  return 0;
}

// --- verify / report --------------------------------------------------------

int cmd_verify(const Options& o, bool out_given) {
  Config c = load_config(o);
  if (out_given && c.str("verify.output_dir").empty()) c.set("verify.output_dir", (fs::path(o.out) / "trajectories").string());
  SuiteOptions opt = SuiteOptions::from_config(c);
  opt.progress = [](const std::string& s) { std::cerr << s << '\n'; };
  const CertificateReport report = run_verification_suite(opt);
  std::ostringstream text;
  report.render(text);
  std::cout << text.str();
  if (out_given) std::ofstream(output_dir(o) / "certificates.txt") << text.str();
  return report.all_pass() ? 0 : 1;
}

int cmd_report(const Options& o) {
  ReportOptions r;
  if (!o.config.empty() || !o.overrides.empty()) {
    const Config c = load_config(o);
    r.lambda0 = std::min(potential_from(c, "u").lambda0(), potential_from(c, "v").lambda0());
  }
  std::cout << render_report(read_csv_file(o.csv), r);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poisson-Nernst-Planck simulator and verification lab"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* s) {
    s->add_option("--config", o.config, "configuration file")->check(CLI::ExistingFile);
    s->add_option("--set", o.overrides, "override a config key: section.key=value (repeatable)");
  };
  auto with_out = [&](CLI::App* s) { s->add_option("--out", o.out, "output directory"); };
  auto with_eps = [&](CLI::App* s) { s->add_option("--epsilon", o.epsilon, "coupling strength"); };

  auto* steady = app.add_subcommand("steady", "compute the steady state");
  common(steady);
  with_eps(steady);
  with_out(steady);

  auto* fv = app.add_subcommand("evolve-fv", "run the finite-volume integrator");
  common(fv);
  with_eps(fv);
  with_out(fv);

  auto* jko = app.add_subcommand("evolve-jko", "run the radial JKO scheme");
  common(jko);
  with_eps(jko);
  with_out(jko);
  jko->add_option("--tau", o.tau, "JKO time step");
  jko->add_option("--steps", o.steps, "number of JKO steps");

  auto* verify = app.add_subcommand("verify", "run the verification suite");
  common(verify);
  auto* out_opt = verify->add_option("--out", o.out, "directory for the certificate report and trajectory CSVs");
  verify->add_option("--seed", o.seed, "seed for randomized certificates");

  auto* report = app.add_subcommand("report", "summarize a diagnostics CSV");
  common(report);
  report->add_option("csv", o.csv, "diagnostics CSV")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*steady) return cmd_steady(o);
    if (*fv) return cmd_fv(o);
    if (*jko) return cmd_jko(o);
    if (*verify) return cmd_verify(o, out_opt->count() > 0);
    if (*report) return cmd_report(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
