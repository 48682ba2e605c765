#pragma once

// Text summary of a diagnostics CSV: extent of the trajectory, monotonicity
// and conservation checks, and decay fits over a window scaled by 1/lambda0.
// The output depends only on the table and the options.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "pnp/lab/diagnostics.hpp"
#include "pnp/lab/fit.hpp"

namespace pnp::lab {

struct ReportOptions {
  double lambda0 = 1.0;
  double window_start = 0.5;  // in units of 1/lambda0
  double window_end = 3.0;
};

namespace report_detail {

inline std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

inline std::string sci(double x) { return fmt("%.6e", x); }

}  // namespace report_detail

inline std::string render_report(const CsvTable& table, const ReportOptions& opt = {}) {
  using report_detail::sci;
  std::string out;
  auto line = [&](const std::string& s) { out += s + '\n'; };
  const std::size_t n = table.rows();
  line("rows: " + std::to_string(n));
  if (n == 0) return out;
  const auto& t = table.column("t");
  line("time range: " + sci(t.front()) + " .. " + sci(t.back()));

  line("");
  line("quantity | first | last | min | max");
  for (const auto& name : table.columns) {
    if (name == "t") continue;
    const auto& c = table.column(name);
    const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
    line(name + " | " + sci(c.front()) + " | " + sci(c.back()) + " | " + sci(*lo) + " | " + sci(*hi));
  }

  line("");
  if (table.has("energy_total")) {
    const auto& e = table.column("energy_total");
    double rise = 0.0;
    for (std::size_t i = 1; i < n; ++i) rise = std::max(rise, e[i] - e[i - 1]);
    line("max energy increase between rows: " + sci(rise));
  }
  for (const char* m : {"mass_u", "mass_v"}) {
    if (!table.has(m)) continue;
    const auto& c = table.column(m);
    double drift = 0.0;
    for (double x : c) drift = std::max(drift, std::abs(x - c.front()));
    line(std::string("max ") + m + " drift: " + sci(drift));
  }
  if (table.has("fint_slack")) {
    const auto& c = table.column("fint_slack");
    line("max fint_slack: " + sci(*std::max_element(c.begin(), c.end())));
  }

  const double t0 = opt.window_start / opt.lambda0, t1 = opt.window_end / opt.lambda0;
  line("");
  line("decay fits on [" + sci(t0) + ", " + sci(t1) + "]");
  line("quantity | rate | r^2 | samples | predicted floor");
  for (const char* q : {"aux_entropy", "l2_dist_u", "l2_dist_v", "w2_dist_u", "w2_dist_v"}) {
    if (!table.has(q)) continue;
    const double floor = std::string(q) == "aux_entropy" ? 2.0 * opt.lambda0 : opt.lambda0;
    try {
      const DecayFit f = fit_decay_rate(t, table.column(q), q, t0, t1);
      line(std::string(q) + " | " + report_detail::fmt("%.6f", f.rate) + " | " + report_detail::fmt("%.6f", f.r_squared) +
           " | " + std::to_string(f.samples) + " | " + report_detail::fmt("%.6f", floor));
    } catch (const InvalidArgument& e) {
      line(std::string(q) + " | n/a (" + e.what() + ")");
    }
  }
  return out;
}

}  // namespace pnp::lab
