#pragma once

#include <string>
#include <vector>

// Photon-shot-noise-limited field sensitivity.
namespace nvkit::magnetometry {

struct SensorParams {
  double count_rate = 0.0;      // counts/s
  double contrast = 0.0;        // Lambda, (0, 1)
  double readout_window = 0.0;  // t_L
  double t2_star = 0.0;
  double t2 = 0.0;
  // Seconds per time unit of readout_window, t2_star and t2; 1e-6 for µs.
  double time_unit_s = 1e-6;

  void validate() const;
};

struct SensitivityReport {
  double eta_dc = 0.0;  // nT/sqrt(Hz)
  double eta_ac = 0.0;  // nT/sqrt(Hz)
  double hbar = 0.0;
  double lande_g = 0.0;
  double bohr_magneton = 0.0;
  std::vector<std::string> notes;
};

// eta_dc = hbar / (g muB) / (Lambda sqrt(C t_L)) / sqrt(T2*)
// eta_ac = eta_dc sqrt(T2* / T2)
SensitivityReport sensitivity(const SensorParams& params);

// Reference inputs for the single-emitter and ensemble sensors.
SensorParams single_emitter_reference();
SensorParams ensemble_reference();

}  // namespace nvkit::magnetometry
