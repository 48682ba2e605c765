#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "pnp/lab/config.hpp"
#include "pnp/lab/diagnostics.hpp"
#include "pnp/lab/fit.hpp"
#include "pnp/lab/report.hpp"
#include "pnp/lab/suite.hpp"

using namespace pnp;
using namespace pnp::lab;

namespace {

std::pair<std::vector<double>, std::vector<double>> series(double (*f)(double), double t1 = 4.0, int n = 200) {
  std::vector<double> t, v;
  for (int i = 0; i <= n; ++i) {
    t.push_back(t1 * i / n);
    v.push_back(f(t.back()));
  }
  return {t, v};
}

}  // namespace

// --- fits ---------------------------------------------------------------------

TEST(Fit, ExactExponential) {
  const auto [t, v] = series([](double s) { return 3.0 * std::exp(-2.0 * s); });
  const auto f = fit_decay_rate(t, v, "x", 0.5, 3.0);
  EXPECT_NEAR(f.rate, 2.0, 1e-9);
  EXPECT_GE(f.r_squared, 1.0 - 1e-12);
  EXPECT_EQ(f.t_start, 0.5);
  EXPECT_EQ(f.t_end, 3.0);
}

TEST(Fit, OscillatoryPerturbation) {
  const auto [t, v] = series([](double s) { return std::exp(-2.0 * s) * (1.0 + 0.01 * std::sin(10.0 * s)); });
  EXPECT_NEAR(fit_decay_rate(t, v, "x", 0.5, 3.0).rate, 2.0, 0.02);
}

TEST(Fit, ConstantHasZeroRate) {
  const auto [t, v] = series([](double) { return 0.7; });
  const auto f = fit_decay_rate(t, v, "x", 0.5, 3.0);
  EXPECT_NEAR(f.rate, 0.0, 1e-14);
}

TEST(Fit, NonpositiveSampleSuggestsAShorterWindow) {
  auto [t, v] = series([](double s) { return std::exp(-s); });
  v[100] = 0.0;  // t = 2
  try {
    fit_decay_rate(t, v, "x", 0.5, 3.0);
    FAIL();
  } catch (const FitWindowError& e) {
    EXPECT_NE(std::string(e.what()).find("shrink the window"), std::string::npos);
  }
}

TEST(Fit, SamplesBelowTheFloorAreSkipped) {
  auto [t, v] = series([](double s) { return std::exp(-2.0 * s); });
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] > 2.0) v[i] = 1e-13;
  EXPECT_NEAR(fit_decay_rate(t, v, "x", 0.5, 3.0).rate, 2.0, 1e-9);
}

TEST(Fit, TooFewSamples) {
  const auto [t, v] = series([](double s) { return std::exp(-s); }, 4.0, 20);
  EXPECT_THROW(fit_decay_rate(t, v, "x", 0.5, 1.5), FitWindowError);
  EXPECT_THROW(fit_decay_rate(t, v, "x", 2.0, 1.0), InvalidArgument);
}

TEST(Fit, FromRecords) {
  std::vector<DiagnosticsRecord> rs;
  for (int i = 0; i <= 60; ++i) {
    DiagnosticsRecord r;
    r.t = 0.05 * i;
    r.aux_entropy = std::exp(-4.0 * r.t);
    rs.push_back(r);
  }
  EXPECT_NEAR(fit_decay_rate(rs, "aux_entropy", 0.5, 3.0).rate, 4.0, 1e-9);
  EXPECT_THROW(fit_decay_rate(rs, "nonsense", 0.5, 3.0), InvalidArgument);
}

// --- config -------------------------------------------------------------------

TEST(Config, ParsesSectionsCommentsAndDefaults) {
  std::istringstream is("# comment\n[grid]\ncells = 128 ; trailing\n\n[coupling]\nepsilon=0.05\n");
  const Config c = Config::parse(is);
  EXPECT_EQ(c.integer("grid.cells"), 128);
  EXPECT_DOUBLE_EQ(c.num("coupling.epsilon"), 0.05);
  EXPECT_DOUBLE_EQ(c.num("grid.extent"), 4.0);
  EXPECT_EQ(coupling_from(c).epsilon, 0.05);
}

TEST(Config, UnknownKeyIsNamed) {
  std::istringstream is("[grid]\ncellz = 3\n");
  try {
    Config::parse(is, "x.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    const std::string w = e.what();
    EXPECT_NE(w.find("grid.cellz"), std::string::npos);
    EXPECT_NE(w.find("x.cfg:2"), std::string::npos);
  }
}

TEST(Config, MalformedInputs) {
  for (const char* text : {"[grid\ncells = 1\n", "[nope]\n", "cells = 3\n", "[grid]\ncells\n"}) {
    std::istringstream is(text);
    EXPECT_THROW(Config::parse(is), ConfigError) << text;
  }
}

TEST(Config, TypedAccessorsNameTheKey) {
  Config c;
  c.set("grid.cells", "12x");
  EXPECT_THROW(c.integer("grid.cells"), ConfigError);
  c.set("grid.init_u_center", "1,2");
  EXPECT_THROW(c.vec3("grid.init_u_center"), ConfigError);
  c.set("grid.init_u_center", "1, 2, 3");
  EXPECT_EQ(c.vec3("grid.init_u_center"), (Vec3{1, 2, 3}));
  c.set("fv.snapshot_times", "0.5, 1");
  EXPECT_EQ(c.list("fv.snapshot_times"), (std::vector<double>{0.5, 1.0}));
  EXPECT_THROW(c.set("nope.key", "1"), ConfigError);
}

TEST(Config, BuildersWrapDomainErrors) {
  Config c;
  c.set("coupling.epsilon", "-0.5");
  EXPECT_THROW(coupling_from(c), ConfigError);
  c = Config();
  c.set("potential.u.kind", "cubic");
  EXPECT_THROW(potential_from(c, "u"), ConfigError);
  c = Config();
  c.set("potential.v.lambda0", "0");
  EXPECT_THROW(potential_from(c, "v"), ConfigError);
  c = Config();
  c.set("jko.optimizer_tolerance", "1e-3");
  EXPECT_THROW(jko_from(c), ConfigError);
  c = Config();
  c.set("fv.reconstruction", "weno");
  EXPECT_THROW(fv_from(c), ConfigError);
  c = Config();
  c.set("grid.mode", "cylinder");
  EXPECT_THROW(radial_mode(c), ConfigError);
  c = Config();
  c.set("verify.experiments", "steady,bogus");
  EXPECT_THROW(SuiteOptions::from_config(c), ConfigError);
}

TEST(Config, JkoQuantileCountDefaultsToCells) {
  Config c;
  c.set("grid.cells", "300");
  EXPECT_EQ(jko_from(c).K, 300u);
  c.set("jko.K", "128");
  EXPECT_EQ(jko_from(c).K, 128u);
}

TEST(Config, SampleFileParses) {
  const Config c = Config::load(std::string(PNP_SOURCE_DIR) + "/configs/base.cfg");
  EXPECT_TRUE(radial_mode(c));
  const Config b = Config::load(std::string(PNP_SOURCE_DIR) + "/configs/box_asymmetric.cfg");
  EXPECT_FALSE(radial_mode(b));
  EXPECT_NO_THROW(model_from(b, box_grid_from(b)));
}

// --- CSV ------------------------------------------------------------------------

TEST(Csv, ColumnsFollowTheLayout) {
  const auto fv = csv_columns({true, false});
  EXPECT_EQ(fv.front(), "t");
  EXPECT_NE(std::find(fv.begin(), fv.end(), "w2_dist_u"), fv.end());
  EXPECT_EQ(std::find(fv.begin(), fv.end(), "fint_slack"), fv.end());
  const auto box = csv_columns({false, false});
  EXPECT_EQ(std::find(box.begin(), box.end(), "w2_dist_u"), box.end());
  EXPECT_EQ(csv_columns({true, true}).back(), "fint_slack");
}

TEST(Csv, RoundTripIsExact) {
  const auto path = std::filesystem::temp_directory_path() / "pnp_csv_roundtrip.csv";
  DiagnosticsRecord r;
  r.t = 0.1;
  r.energy.total = 1.0 / 3.0;
  r.aux_entropy = 1e-300;
  r.w2_dist_u = std::nextafter(1.0, 2.0);
  r.fint_slack = -4.9e-14;
  {
    CsvWriter w(path.string(), {true, true});
    w.write(r);
    r.t = 0.2;
    w.write(r);
  }
  const CsvTable t = read_csv_file(path.string());
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.column("energy_total")[0], 1.0 / 3.0);
  EXPECT_EQ(t.column("aux_entropy")[1], 1e-300);
  EXPECT_EQ(t.column("w2_dist_u")[0], std::nextafter(1.0, 2.0));
  EXPECT_EQ(t.column("fint_slack")[0], -4.9e-14);
  EXPECT_TRUE(std::isnan(t.column("w2_dist_v")[0]));
  std::filesystem::remove(path);
}

TEST(Csv, RejectsRaggedRows) {
  std::istringstream a("t,x\n1,2,3\n");
  EXPECT_THROW(read_csv(a), InvalidArgument);
  std::istringstream b("t,x\n1\n");
  EXPECT_THROW(read_csv(b), InvalidArgument);
}

// --- report -------------------------------------------------------------------

TEST(Report, DeterministicAndFitsRates) {
  std::ostringstream csv;
  csv << "t,energy_total,aux_entropy,mass_u\n";
  for (int i = 0; i <= 60; ++i) {
    const double t = 0.05 * i;
    csv << format_double(t) << ',' << format_double(1.0 + std::exp(-3 * t)) << ','
        << format_double(std::exp(-3 * t)) << ",1\n";
  }
  std::istringstream a(csv.str()), b(csv.str());
  const std::string ra = render_report(read_csv(a)), rb = render_report(read_csv(b));
  EXPECT_EQ(ra, rb);
  EXPECT_NE(ra.find("aux_entropy | 3.000000"), std::string::npos) << ra;
  EXPECT_NE(ra.find("max energy increase between rows: 0.000000e+00"), std::string::npos) << ra;
}

TEST(Report, FitFailureIsReportedNotThrown) {
  std::istringstream is("t,aux_entropy\n0,1\n1,0\n");
  const std::string r = render_report(read_csv(is));
  EXPECT_NE(r.find("n/a"), std::string::npos);
}

// --- certificates ---------------------------------------------------------------

TEST(Certificate, SlackAndStatus) {
  Certificate c;
  c.measured = 0.5;
  c.bound = 1.0;
  c.relation = Relation::AtMost;
  EXPECT_DOUBLE_EQ(c.slack(), 0.5);
  EXPECT_TRUE(c.pass());
  c.relation = Relation::AtLeast;
  EXPECT_FALSE(c.pass());
  c.asserted = false;
  EXPECT_TRUE(c.pass());
  c.asserted = true;
  c.measured = NAN;
  c.relation = Relation::AtMost;
  EXPECT_FALSE(c.pass());
}

TEST(Suite, CheapExperimentsPass) {
  SuiteOptions o;
  o.radial_cells = 256;
  o.experiments = {"steady", "poisson", "potentials", "jko"};
  const auto r = run_verification_suite(o);
  std::ostringstream os;
  r.render(os);
  EXPECT_TRUE(r.all_pass()) << os.str();
  EXPECT_FALSE(r.for_criterion(1).empty());
  EXPECT_FALSE(r.for_criterion(5).empty());
}

TEST(Suite, CorruptedSteadyStateIsCaught) {
  SuiteOptions o;
  o.radial_cells = 256;
  o.experiments = {"steady", "sandwich"};
  o.inject_steady_scale = 1.01;
  const auto r = run_verification_suite(o);
  auto failed = [&](int k, const std::string& part) {
    for (const auto* c : r.for_criterion(k))
      if (c->name.find(part) != std::string::npos && !c->pass()) return true;
    return false;
  };
  EXPECT_TRUE(failed(1, "stationarity"));
  EXPECT_TRUE(failed(6, "||u-u_inf||^2"));
  EXPECT_FALSE(r.all_pass());
}

TEST(Suite, ExperimentErrorsBecomeFailedCertificates) {
  SuiteOptions o;
  o.experiments = {"steady"};
  o.steady.max_iterations = 1;
  o.steady.tolerance = 1e-14;
  const auto r = run_verification_suite(o);
  ASSERT_FALSE(r.items.empty());
  EXPECT_FALSE(r.all_pass());
  bool error_seen = false;
  for (const auto& c : r.items) error_seen |= c.note.rfind("error:", 0) == 0;
  EXPECT_TRUE(error_seen);
}
