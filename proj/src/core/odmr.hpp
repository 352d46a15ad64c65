#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "spin_model.hpp"

namespace nvkit::odmr {

enum class Mode { Cw, Pulsed };

// Lorentzian FWHM presets (MHz). The pulsed preset is narrow enough to
// resolve 2.16 MHz hyperfine structure.
inline constexpr double kCwFwhm = 8.0;
inline constexpr double kPulsedFwhm = 0.7;
double default_fwhm(Mode mode);

struct OdmrSpectrum {
  Mode mode = Mode::Cw;
  std::vector<double> freqs;   // MHz, strictly increasing
  std::vector<double> signal;  // normalized PL
  std::vector<double> sigma;   // all zero: unknown, fit unweighted

  std::size_t size() const { return freqs.size(); }
  void validate() const;
};

struct LineShapeModel {
  std::vector<double> centers;    // MHz
  std::vector<double> contrasts;  // fractional dip depth
  std::vector<double> fwhms;      // MHz
  double baseline = 1.0;

  std::size_t size() const { return centers.size(); }
  double evaluate(double freq) const;
  void validate() const;
};

struct NoiseSpec {
  enum class Kind { None, Gaussian, Poisson };
  Kind kind = Kind::None;
  double sigma = 0.0;            // Gaussian, absolute signal units
  double counts_per_point = 0.0; // Poisson, photon counts at baseline
  std::uint64_t seed = 0;
};

struct SynthesisOptions {
  Mode mode = Mode::Cw;
  double fwhm = 0.0;  // 0 selects default_fwhm(mode)
  double contrast = 0.1;
  // Extra contrast factor for the lower-frequency branch of each orientation.
  double lower_branch_weight = 1.0;
  double baseline = 1.0;
  // Sum the four <111> orientations with weight 1/4 each (the system's own
  // orientation is ignored).
  bool ensemble = false;
  NoiseSpec noise;
};

// Dip model built from the exact transitions: one Lorentzian per allowed line
// with contrast = options.contrast * strength (* branch weight).
LineShapeModel dip_model(const spin::SpinSystem& system,
                         const spin::FieldEnvironment& env,
                         const SynthesisOptions& options);

OdmrSpectrum synthesize_spectrum(const spin::SpinSystem& system,
                                 const spin::FieldEnvironment& env,
                                 const SynthesisOptions& options,
                                 std::span<const double> grid);

// Noise is applied in place; sigma is set to the per-point noise level.
void apply_noise(OdmrSpectrum& spectrum, const NoiseSpec& noise);

struct OdmrFitResult {
  LineShapeModel model;  // centers ascending
  std::vector<double> center_errors;
  std::vector<double> contrast_errors;
  std::vector<double> fwhm_errors;
  double baseline_error = 0.0;
  // Resonance-pair quantities: lower/upper halves of the sorted dips,
  // area-weighted. delta_fit follows v = D + xi +- 2 Delta (separation / 4);
  // delta_half_separation is separation / 2.
  double d_fit = 0.0;
  double xi_fit = 0.0;
  double delta_fit = 0.0;
  double delta_half_separation = 0.0;
  double v_minus = 0.0;
  double v_plus = 0.0;
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Centers of the n deepest local minima after a 5-point moving average,
// ties broken by lower frequency; returned ascending. A local minimum is the
// lowest smoothed point within half the mode's preset FWHM on each side.
std::vector<double> seed_centers(const OdmrSpectrum& spectrum, int n_dips);

OdmrFitResult fit_spectrum(const OdmrSpectrum& spectrum, int n_dips,
                           const std::optional<LineShapeModel>& init = std::nullopt,
                           double d_reference = constants::kZeroFieldSplitting);

// Inverse of resonance_frequencies_approx: xi = (v+ + v-)/2 - D,
// Delta = (v+ - v-)/4.
std::pair<double, double> invert_shift_splitting(double v_minus, double v_plus,
                                                 double d);

}  // namespace nvkit::odmr
