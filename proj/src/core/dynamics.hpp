#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "spin_model.hpp"

// Pulse-sequence dynamics in the rotating frame, phenomenological decoherence
// envelopes, and decay-curve analysis. Times in µs, frequencies in MHz.
namespace nvkit::dynamics {

struct LaserInit {
  double duration = 0.0;
};
struct MwPulse {
  double freq = 0.0;       // carrier, MHz
  double rabi_freq = 0.0;  // resonant two-level Rabi frequency, MHz
  double phase = 0.0;      // rad
  double duration = 0.0;
};
struct Wait {
  double duration = 0.0;
};
struct Readout {
  double window = 0.0;
};

using PulseElement = std::variant<LaserInit, MwPulse, Wait, Readout>;

struct PulseSequence {
  std::vector<PulseElement> elements;

  PulseSequence& laser(double duration);
  PulseSequence& pulse(double freq, double rabi_freq, double phase, double duration);
  PulseSequence& wait(double duration);
  PulseSequence& readout(double window);

  // Starts with LaserInit, has exactly one Readout, durations >= 0,
  // readout window > 0.
  void validate() const;
};

struct CoherenceParams {
  double t1_ms = 4.5;
  double t2_us = 494.0;
  double t2_star_us = 1.76;
  double t_rho_rabi_us = 4.0;
  double n_stretch = 1.0;  // exponent of the stretched envelopes

  void validate() const;
};

enum class Polarization {
  Linear,      // drives both ms=0 <-> +-1 transitions
  SigmaPlus,   // ms=0 <-> +1 only
  SigmaMinus,  // ms=0 <-> -1 only
};

struct PropagationOptions {
  Polarization polarization = Polarization::Linear;
  bool decoherence = true;
  // Readout contrast Lambda: signal = 1 - Lambda (1 - P0).
  double readout_contrast = 0.2;
  bool record_trajectory = false;
};

struct PropagationResult {
  double ms0_population = 1.0;
  double signal = 1.0;
  double trace = 1.0;   // Tr(rho) at readout
  double purity = 1.0;  // Tr(rho^2) at readout
  // ms=0 population after each element, when requested.
  std::vector<double> trajectory;
};

// Evolves the density matrix through the sequence. Work is done in the
// eigenbasis of the static Hamiltonian; each MW pulse is exact within the
// rotating-wave approximation (frame at the pulse carrier, couplings only
// between the ms=0-like and ms=+-1-like manifolds). LaserInit prepares ms=0
// with the nuclei maximally mixed.
//
// Decoherence (when enabled): free evolution damps inter-manifold coherences
// with exp(-(t/T2*)^n) over the accumulated free time and relaxes
// populations toward the identity with T1; a MW pulse damps coherences in
// its dressed basis with exp(-(t/T_rho)^n) over the accumulated drive time.
PropagationResult propagate_sequence(const spin::SpinSystem& system,
                                     const spin::FieldEnvironment& env,
                                     const PulseSequence& seq,
                                     const CoherenceParams& coh,
                                     const PropagationOptions& options = {});

enum class CurveKind { Rabi, Fid, Hahn, T1 };

struct DecayCurve {
  CurveKind kind = CurveKind::Rabi;
  std::vector<double> times;   // µs, strictly increasing
  std::vector<double> signal;
  std::vector<double> sigma;   // all zero: unknown

  std::size_t size() const { return times.size(); }
  void validate() const;
};

void add_gaussian_noise(DecayCurve& curve, double sigma, std::uint64_t seed);

// ms=0 readout signal of LaserInit -> MwPulse(t) -> Readout for each t.
DecayCurve rabi_trace(const spin::SpinSystem& system, const spin::FieldEnvironment& env,
                      double mw_freq, double rabi_freq, std::span<const double> times,
                      const CoherenceParams& coh, const PropagationOptions& options = {});

// Peak-to-trough modulation of the envelope of the dominant oscillation:
// the signal is band-passed to [0.5, 1.5] x the strongest DFT frequency,
// the envelope is the analytic-signal magnitude, and the depth is
// (max - min) / (max + min) over the central 80% of the record.
double modulation_depth(std::span<const double> times, std::span<const double> signal);

struct CurveShape {
  double amplitude = 1.0;
  double baseline = 0.0;
};

enum class Branch { Lower, Upper };

// baseline + amplitude exp(-(t/T2*)^n) sum_k w_k cos(2 pi delta_k t), with
// delta_k the offsets of the branch's hyperfine lines from
// (strength-weighted branch centroid + detuning), w_k normalized strengths.
DecayCurve simulate_fid(const spin::SpinSystem& system, const spin::FieldEnvironment& env,
                        const CoherenceParams& coh, double detuning,
                        std::span<const double> times, const CurveShape& shape = {},
                        Branch branch = Branch::Lower);

// 13C bath Larmor frequency (MHz) for a field magnitude in mT.
double larmor_13c(double b_mt);

inline constexpr double kHahnModulationDepth = 0.8;

// baseline + amplitude exp(-(t/T2)^n) [1 - m sin^4(pi f_L t)], t the echo
// delay; revivals every 1/f_L.
DecayCurve simulate_hahn(const CoherenceParams& coh, double larmor_freq,
                         std::span<const double> times, const CurveShape& shape = {},
                         double modulation_depth = kHahnModulationDepth);

// baseline + amplitude exp(-t/T1).
DecayCurve simulate_relaxometry(const CoherenceParams& coh, std::span<const double> times,
                                const CurveShape& shape = {});

enum class EnvelopeModel { Stretched, SingleExp, StretchedTimesOsc };

struct OscillationComponent {
  double frequency = 0.0;  // MHz
  double amplitude = 0.0;
};

struct EnvelopeFit {
  double t_coh = 0.0;
  double n_stretch = 1.0;
  double amplitude = 0.0;
  double baseline = 0.0;
  double t_coh_error = 0.0;
  double n_stretch_error = 0.0;
  double amplitude_error = 0.0;
  double baseline_error = 0.0;
  std::vector<OscillationComponent> oscillations;
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct EnvelopeFitOptions {
  double n_lower = 0.5;
  double n_upper = 3.0;
  double n_initial = 1.5;
  int oscillation_components = 1;  // StretchedTimesOsc only
};

EnvelopeFit fit_decay_envelope(const DecayCurve& curve, EnvelopeModel model,
                               const EnvelopeFitOptions& options = {});

// Spectral lines of a time trace, strongest first. Non-uniform sampling is
// linearly resampled onto a uniform grid of the same length. Candidates are
// Hann-windowed, 8x zero-padded DFT peaks above max(5 x median, 0.1 x
// strongest) and away from DC; they are then refined jointly by least squares
// on c + exp(-u t) [d + sum_k (a_k cos + b_k sin)(2 pi f_k t)].
std::vector<OscillationComponent> extract_frequencies(const DecayCurve& curve,
                                                      int max_components);

}  // namespace nvkit::dynamics
