#include "photon_stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "error.hpp"
#include "lm.hpp"

namespace nvkit::photon {

void G2Curve::validate() const {
  require(taus.size() == g2.size() && taus.size() == sigma.size(),
          "g2 curve arrays must have equal lengths");
  for (std::size_t i = 0; i < taus.size(); ++i)
    require(std::isfinite(taus[i]) && std::isfinite(g2[i]) && std::isfinite(sigma[i]) &&
                sigma[i] >= 0.0,
            "g2 curve has non-finite or negative-sigma entries");
}

void G2Params::validate() const {
  require(std::isfinite(tau0), "tau0 must be finite");
  for (double t : {tau1, tau2, tau3}) require(std::isfinite(t) && t > 0.0, "g2 decay times must be positive");
  for (double c : {c1, c2, c3}) require(std::isfinite(c), "g2 amplitudes must be finite");
}

double g2_model(double tau, const G2Params& p) {
  const double d = std::fabs(tau - p.tau0);
  return 1.0 - p.c1 * std::exp(-d / p.tau1) + p.c2 * std::exp(-d / p.tau2) +
         p.c3 * std::exp(-d / p.tau3);
}

double g2_at_zero_delay(const G2Params& p) { return g2_model(p.tau0, p); }

namespace {

G2Params unpack(std::span<const double> q) {
  G2Params p;
  p.tau0 = q[0];
  p.c1 = q[1];
  p.tau1 = q[2];
  p.c2 = q[3];
  p.tau2 = q[4];
  p.c3 = q[5];
  p.tau3 = q[6];
  return p;
}

std::vector<double> pack(const G2Params& p) {
  return {p.tau0, p.c1, p.tau1, p.c2, p.tau2, p.c3, p.tau3};
}

// Heuristic start: dip position, bunching height and its 1/e decay.
G2Params heuristic_start(const G2Curve& c) {
  const auto imin = static_cast<std::size_t>(
      std::min_element(c.g2.begin(), c.g2.end()) - c.g2.begin());
  const double g_min = c.g2[imin];
  const double g_max = *std::max_element(c.g2.begin(), c.g2.end());
  const double bunch = std::max(g_max - 1.0, 0.05);
  G2Params p;
  p.tau0 = c.taus[imin];

  double t_half = 1.0;
  double t_e = 100.0;
  bool found_half = false;
  bool found_e = false;
  std::vector<std::size_t> order(c.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::fabs(c.taus[a] - p.tau0) < std::fabs(c.taus[b] - p.tau0);
  });
  const double mid = 0.5 * (g_min + g_max);
  bool past_peak = false;
  for (std::size_t i : order) {
    const double d = std::fabs(c.taus[i] - p.tau0);
    if (!found_half && c.g2[i] >= mid) {
      t_half = std::max(d, 0.05);
      found_half = true;
    }
    if (c.g2[i] >= g_max - 0.5 * bunch) past_peak = true;
    if (past_peak && !found_e && d > 3.0 * t_half && c.g2[i] - 1.0 <= bunch / std::exp(1.0)) {
      t_e = std::max(d, 4.0 * t_half);
      found_e = true;
    }
  }
  p.tau1 = t_half / std::log(2.0);
  p.c2 = 0.5 * bunch;
  p.c3 = 0.5 * bunch;
  p.tau2 = 0.5 * t_e;
  p.tau3 = 2.0 * t_e;
  p.c1 = std::clamp(1.0 + bunch - g_min, 0.0, 5.0);
  return p;
}

}  // namespace

G2FitResult fit_g2(const G2Curve& curve, const std::optional<G2Params>& init) {
  curve.validate();
  require(curve.size() >= 14, "g2 fit needs at least 14 points");
  if (init) init->validate();
  const auto [lo_it, hi_it] = std::minmax_element(curve.taus.begin(), curve.taus.end());
  const double t_lo = *lo_it;
  const double t_hi = *hi_it;
  require(t_hi > t_lo, "g2 delays must span a range");

  const bool weighted = std::all_of(curve.sigma.begin(), curve.sigma.end(),
                                    [](double s) { return s > 0.0; });
  const std::size_t n = curve.size();
  auto residuals = [&](std::span<const double> q, std::span<double> r) {
    const G2Params p = unpack(q);
    for (std::size_t i = 0; i < n; ++i)
      r[i] = (g2_model(curve.taus[i], p) - curve.g2[i]) / (weighted ? curve.sigma[i] : 1.0);
  };
  const std::vector<fit::Bounds> bounds{{t_lo, t_hi},     {0.0, 5.0}, {0.01, 1e4},
                                        {0.0, 5.0},       {0.01, 1e4}, {0.0, 5.0},
                                        {0.01, 1e4}};

  std::vector<G2Params> starts;
  if (init) {
    starts.push_back(*init);
  } else {
    const G2Params h = heuristic_start(curve);
    starts.push_back(h);
    for (double s : {0.3, 3.0}) {
      G2Params v = h;
      v.tau2 *= s;
      v.tau3 *= s;
      starts.push_back(v);
    }
  }

  fit::LmResult best;
  bool have = false;
  for (const auto& s : starts) {
    if (have && best.converged) break;
    fit::LmResult r = fit::levenberg_marquardt(residuals, n, pack(s), bounds);
    if (!have || (r.converged && !best.converged) ||
        (r.converged == best.converged && r.chi_square < best.chi_square)) {
      best = std::move(r);
      have = true;
    }
  }

  G2Params p = unpack(best.params);
  G2Params e = unpack(best.errors);
  // Order the three exponential terms by decay time; each term keeps its own
  // sign role, so only the two positive (bunching) terms can swap.
  if (p.tau2 > p.tau3) {
    std::swap(p.tau2, p.tau3);
    std::swap(p.c2, p.c3);
    std::swap(e.tau2, e.tau3);
    std::swap(e.c2, e.c3);
  }
  G2FitResult out;
  out.params = p;
  out.errors = e;
  out.residual_norm = best.residual_norm;
  out.converged = best.converged;
  out.iterations = best.iterations;
  return out;
}

SaturationFit make_saturation(double c_sat, double p_sat) {
  require(std::isfinite(c_sat) && c_sat > 0.0 && std::isfinite(p_sat) && p_sat > 0.0,
          "saturation parameters must be positive");
  SaturationFit f;
  f.c_sat = c_sat;
  f.p_sat = p_sat;
  f.k_linear = c_sat / p_sat;
  f.converged = true;
  return f;
}

double saturation_model(double power_mw, const SaturationFit& fit) {
  require(power_mw >= 0.0, "power must be non-negative");
  require(fit.c_sat > 0.0 && fit.p_sat > 0.0, "saturation parameters must be positive");
  return fit.c_sat * power_mw / (power_mw + fit.p_sat);
}

double calibrate_c_sat(double power_mw, double rate, double p_sat) {
  require(power_mw > 0.0 && rate > 0.0 && p_sat > 0.0, "calibration inputs must be positive");
  return rate * (power_mw + p_sat) / power_mw;
}

SaturationFit fit_saturation(std::span<const SaturationPoint> points) {
  std::set<double> distinct;
  for (const auto& pt : points) {
    require(std::isfinite(pt.power_mw) && pt.power_mw > 0.0, "powers must be positive");
    require(std::isfinite(pt.rate), "rates must be finite");
    distinct.insert(pt.power_mw);
  }
  require(distinct.size() >= 3, "saturation fit needs at least 3 distinct powers");

  double r_max = 0.0;
  for (const auto& pt : points) r_max = std::max(r_max, pt.rate);
  if (r_max <= 0.0) throw NumericError("fit_saturation: no positive rates");
  const std::vector<double> powers(distinct.begin(), distinct.end());
  const double p_mid = powers[powers.size() / 2];

  auto residuals = [&](std::span<const double> q, std::span<double> r) {
    for (std::size_t i = 0; i < points.size(); ++i)
      r[i] = (q[0] * points[i].power_mw / (points[i].power_mw + q[1]) - points[i].rate) / r_max;
  };
  const double p_hi = powers.back();
  const std::vector<fit::Bounds> bounds{{1e-12 * r_max, 1e6 * r_max},
                                        {1e-6 * powers.front(), 1e6 * p_hi}};
  fit::LmResult best;
  bool have = false;
  for (double s : {1.0, 0.1, 10.0}) {
    const double p0 = s * p_mid;
    const double c0 = r_max * (p_hi + p0) / p_hi;
    fit::LmResult r = fit::levenberg_marquardt(residuals, points.size(), {c0, p0}, bounds);
    if (!have || r.chi_square < best.chi_square) {
      best = std::move(r);
      have = true;
    }
  }
  SaturationFit f = make_saturation(best.params[0], best.params[1]);
  f.c_sat_error = best.errors[0];
  f.p_sat_error = best.errors[1];
  f.residual_norm = best.residual_norm * r_max;
  f.converged = best.converged;
  return f;
}

}  // namespace nvkit::photon
