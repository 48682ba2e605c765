#pragma once

// Exponential decay-rate fits: least-squares slope of log(value) against t.

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "pnp/error.hpp"
#include "pnp/lab/diagnostics.hpp"

namespace pnp::lab {

/// Values at or below this are treated as noise and left out of fits.
inline constexpr double kFitFloor = 1e-12;
inline constexpr std::size_t kMinFitSamples = 10;

struct DecayFit {
  double t_start = 0.0;
  double t_end = 0.0;
  std::string quantity;
  double rate = 0.0;
  double r_squared = 0.0;
  std::size_t samples = 0;
  double predicted_rate_floor = std::numeric_limits<double>::quiet_NaN();
};

class FitWindowError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

inline DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& value, const std::string& quantity,
                               double t_start, double t_end) {
  if (!(t_start < t_end)) throw InvalidArgument("fit window needs t_start < t_end");
  if (t.size() != value.size()) throw InvalidArgument("fit: time and value lengths differ");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_start || t[i] > t_end) continue;
    if (!(value[i] > 0.0)) {
      std::ostringstream os;
      os << "fit of " << quantity << ": nonpositive sample " << value[i] << " at t = " << t[i]
         << "; shrink the window to end before t = " << t[i];
      throw FitWindowError(os.str());
    }
    if (value[i] <= kFitFloor) continue;
    x.push_back(t[i]);
    y.push_back(std::log(value[i]));
  }
  if (x.size() < kMinFitSamples) {
    std::ostringstream os;
    os << "fit of " << quantity << ": only " << x.size() << " samples above " << kFitFloor << " in [" << t_start << ", "
       << t_end << "]; need " << kMinFitSamples << " (sample more densely or end the window earlier)";
    throw FitWindowError(os.str());
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  DecayFit f;
  f.t_start = t_start;
  f.t_end = t_end;
  f.quantity = quantity;
  f.rate = -slope;
  f.samples = x.size();
  const double scale = std::max(1.0, my * my);
  f.r_squared = syy <= 1e-28 * scale ? 1.0 : sxy * sxy / (sxx * syy);
  return f;
}

/// Column accessor for records, by CSV column name.
inline double record_value(const DiagnosticsRecord& r, const std::string& q) {
  if (q == "t") return r.t;
  if (q == "energy_total") return r.energy.total;
  if (q == "aux_entropy") return r.aux_entropy;
  if (q == "dissipation") return r.dissipation;
  if (q == "coercive_integral") return r.coercive_integral;
  if (q == "l2_dist_u") return r.l2_dist_u;
  if (q == "l2_dist_v") return r.l2_dist_v;
  if (q == "w2_dist_u" && r.w2_dist_u) return *r.w2_dist_u;
  if (q == "w2_dist_v" && r.w2_dist_v) return *r.w2_dist_v;
  if (q == "psi_sup") return r.psi_sup;
  throw InvalidArgument("no fittable quantity '" + q + "' in the record");
}

inline DecayFit fit_decay_rate(const std::vector<DiagnosticsRecord>& records, const std::string& quantity,
                               double t_start, double t_end) {
  std::vector<double> t, v;
  for (const auto& r : records) {
    t.push_back(r.t);
    v.push_back(record_value(r, quantity));
  }
  return fit_decay_rate(t, v, quantity, t_start, t_end);
}

}  // namespace pnp::lab
