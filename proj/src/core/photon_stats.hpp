#pragma once

#include <optional>
#include <span>
#include <vector>

// Photon-correlation g2(tau) model and PL saturation. Delays in ns, powers
// in mW, rates in counts/s.
namespace nvkit::photon {

struct G2Curve {
  std::vector<double> taus;  // ns
  std::vector<double> g2;
  std::vector<double> sigma;  // all zero: unknown

  std::size_t size() const { return taus.size(); }
  void validate() const;
};

struct G2Params {
  double tau0 = 0.0;
  double c1 = 0.0, tau1 = 1.0;
  double c2 = 0.0, tau2 = 1.0;
  double c3 = 0.0, tau3 = 1.0;

  void validate() const;
};

struct G2FitResult {
  G2Params params;  // tau1 < tau2 < tau3 after label sorting
  G2Params errors;
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
};

// 1 - C1 e^{-|t-t0|/t1} + C2 e^{-|t-t0|/t2} + C3 e^{-|t-t0|/t3}
double g2_model(double tau, const G2Params& p);

// g2 value at tau0, i.e. the model's zero-delay antibunching depth.
double g2_at_zero_delay(const G2Params& p);

// Bounds: tau_i in [0.01, 1e4] ns, C_i in [0, 5], tau0 within the sampled
// range. Labels are reassigned by ascending tau after the fit.
G2FitResult fit_g2(const G2Curve& curve, const std::optional<G2Params>& init = std::nullopt);

struct SaturationFit {
  double c_sat = 0.0;     // counts/s
  double p_sat = 0.0;     // mW
  double k_linear = 0.0;  // counts/s/mW
  double c_sat_error = 0.0;
  double p_sat_error = 0.0;
  double residual_norm = 0.0;
  bool converged = false;
};

SaturationFit make_saturation(double c_sat, double p_sat);

// C(P) = c_sat P / (P + p_sat)
double saturation_model(double power_mw, const SaturationFit& fit);

// c_sat such that saturation_model(power) == rate for the given p_sat.
double calibrate_c_sat(double power_mw, double rate, double p_sat);

struct SaturationPoint {
  double power_mw = 0.0;
  double rate = 0.0;
};

SaturationFit fit_saturation(std::span<const SaturationPoint> points);

}  // namespace nvkit::photon
