#ifndef NVKIT_NVKIT_H
#define NVKIT_NVKIT_H

/* nvkit: NV-center spin simulation and analysis, C interface.
 *
 * Every function returns an nvkit_status. On failure the message of the most
 * recent error on the calling thread is available from nvkit_last_error().
 * Handles are opaque and owned by the caller; release them with the matching
 * *_destroy function (passing NULL is allowed).
 *
 * Units: frequency MHz, field mT, time µs (g2 delays ns), power mW, rates
 * counts/s, lengths µm. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NVKIT_API __declspec(dllexport)
#else
#define NVKIT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nvkit_status {
  NVKIT_OK = 0,
  NVKIT_ERR_INVALID_ARGUMENT = 1,
  NVKIT_ERR_PARSE = 2,
  NVKIT_ERR_IO = 3,
  NVKIT_ERR_NUMERIC = 4,
  NVKIT_ERR_BUFFER_TOO_SMALL = 5,
  NVKIT_ERR_INTERNAL = 6
} nvkit_status;

NVKIT_API const char* nvkit_last_error(void);
NVKIT_API const char* nvkit_status_name(nvkit_status status);
NVKIT_API const char* nvkit_version(void);

/* ---- spin model ---------------------------------------------------------- */

typedef struct nvkit_spin_system nvkit_spin_system;

typedef enum nvkit_species { NVKIT_N14 = 0, NVKIT_C13 = 1 } nvkit_species;

typedef struct nvkit_environment {
  double b_lab[3]; /* mT */
  double xi;       /* effective shift, MHz */
  double delta;    /* effective splitting, MHz */
} nvkit_environment;

typedef struct nvkit_transition {
  double frequency;
  double strength;
} nvkit_transition;

/* Bare electron spin, D = 2870 MHz, NV axis [111]. */
NVKIT_API nvkit_status nvkit_spin_system_create(nvkit_spin_system** out);
NVKIT_API void nvkit_spin_system_destroy(nvkit_spin_system* sys);
NVKIT_API nvkit_status nvkit_spin_system_set_zfs(nvkit_spin_system* sys, double d_mhz);
/* 0..3: [111], [1-1-1], [-11-1], [-1-11] */
NVKIT_API nvkit_status nvkit_spin_system_set_orientation(nvkit_spin_system* sys, int index);
NVKIT_API nvkit_status nvkit_spin_system_add_nucleus(nvkit_spin_system* sys, nvkit_species species,
                                                     double a_parallel, double a_perp);
NVKIT_API nvkit_status nvkit_spin_system_dimension(const nvkit_spin_system* sys, int* out);

/* Ascending eigenvalues (MHz); *count receives the Hilbert dimension. */
NVKIT_API nvkit_status nvkit_eigenvalues(const nvkit_spin_system* sys, const nvkit_environment* env,
                                         double* out, size_t capacity, size_t* count);
NVKIT_API nvkit_status nvkit_transitions(const nvkit_spin_system* sys, const nvkit_environment* env,
                                         nvkit_transition* out, size_t capacity, size_t* count);
NVKIT_API nvkit_status nvkit_resonances_approx(double d, double xi, double delta, double* v_minus,
                                               double* v_plus);
NVKIT_API nvkit_status nvkit_invert_shift_splitting(double v_minus, double v_plus, double d,
                                                    double* xi, double* delta);

/* ---- sampled curves ------------------------------------------------------ */

typedef enum nvkit_curve_kind {
  NVKIT_CURVE_ODMR_CW = 0,
  NVKIT_CURVE_ODMR_PULSED = 1,
  NVKIT_CURVE_RABI = 2,
  NVKIT_CURVE_FID = 3,
  NVKIT_CURVE_HAHN = 4,
  NVKIT_CURVE_T1 = 5,
  NVKIT_CURVE_G2 = 6,
  NVKIT_CURVE_SATURATION = 7
} nvkit_curve_kind;

/* x, y, sigma triples; the file format follows the kind. Saturation curves
 * carry power in x and rate in y (sigma unused). */
typedef struct nvkit_curve nvkit_curve;

NVKIT_API nvkit_status nvkit_curve_create(nvkit_curve_kind kind, const double* x, const double* y,
                                          const double* sigma, size_t n, nvkit_curve** out);
/* `kind` selects the expected format. */
NVKIT_API nvkit_status nvkit_curve_load(const char* path, nvkit_curve_kind kind, nvkit_curve** out);
/* For decay files the kind is read from the header; pass any of RABI..T1. */
NVKIT_API nvkit_status nvkit_curve_save(const nvkit_curve* curve, const char* path);
NVKIT_API void nvkit_curve_destroy(nvkit_curve* curve);
NVKIT_API nvkit_status nvkit_curve_kind_of(const nvkit_curve* curve, nvkit_curve_kind* out);
NVKIT_API nvkit_status nvkit_curve_size(const nvkit_curve* curve, size_t* out);
/* Copies the columns; any pointer may be NULL. */
NVKIT_API nvkit_status nvkit_curve_data(const nvkit_curve* curve, double* x, double* y,
                                        double* sigma, size_t capacity);
/* Adds Gaussian noise of the given sigma and records it as the per-point
 * uncertainty. */
NVKIT_API nvkit_status nvkit_curve_add_noise(nvkit_curve* curve, double sigma, uint64_t seed);

/* ---- ODMR ---------------------------------------------------------------- */

typedef enum nvkit_noise_kind {
  NVKIT_NOISE_NONE = 0,
  NVKIT_NOISE_GAUSSIAN = 1,
  NVKIT_NOISE_POISSON = 2
} nvkit_noise_kind;

typedef struct nvkit_odmr_options {
  int pulsed;                 /* 0: CW, 1: pulsed */
  double fwhm;                /* 0: mode preset (CW 8 MHz, pulsed 0.7 MHz) */
  double contrast;            /* per unit transition strength */
  double lower_branch_weight; /* extra contrast factor below the centroid */
  double baseline;
  int ensemble;               /* sum the four orientations */
  nvkit_noise_kind noise;
  double noise_sigma;
  double counts_per_point;
  uint64_t seed;
} nvkit_odmr_options;

NVKIT_API void nvkit_odmr_options_default(nvkit_odmr_options* out);

NVKIT_API nvkit_status nvkit_odmr_synthesize(const nvkit_spin_system* sys,
                                             const nvkit_environment* env,
                                             const nvkit_odmr_options* options,
                                             const double* grid, size_t n, nvkit_curve** out);

typedef struct nvkit_odmr_fit nvkit_odmr_fit;

typedef struct nvkit_odmr_summary {
  size_t n_dips;
  double baseline, baseline_error;
  double d_fit, xi_fit, delta_fit, delta_half_separation;
  double v_minus, v_plus;
  double residual_norm;
  int converged;
  int iterations;
} nvkit_odmr_summary;

typedef struct nvkit_dip {
  double center, contrast, fwhm;
  double center_error, contrast_error, fwhm_error;
} nvkit_dip;

/* `init` may be NULL; otherwise n_dips entries (errors ignored). */
NVKIT_API nvkit_status nvkit_odmr_fit_run(const nvkit_curve* spectrum, int n_dips,
                                          const nvkit_dip* init, double init_baseline,
                                          double d_reference, nvkit_odmr_fit** out);
NVKIT_API void nvkit_odmr_fit_destroy(nvkit_odmr_fit* fit);
NVKIT_API nvkit_status nvkit_odmr_fit_summary(const nvkit_odmr_fit* fit, nvkit_odmr_summary* out);
NVKIT_API nvkit_status nvkit_odmr_fit_dip(const nvkit_odmr_fit* fit, size_t index, nvkit_dip* out);
NVKIT_API nvkit_status nvkit_odmr_fit_evaluate(const nvkit_odmr_fit* fit, double freq, double* out);

/* ---- spin dynamics ------------------------------------------------------- */

typedef struct nvkit_sequence nvkit_sequence;

typedef struct nvkit_coherence {
  double t1_ms;
  double t2_us;
  double t2_star_us;
  double t_rho_rabi_us;
  double n_stretch;
} nvkit_coherence;

typedef enum nvkit_polarization {
  NVKIT_POL_LINEAR = 0,
  NVKIT_POL_SIGMA_PLUS = 1,
  NVKIT_POL_SIGMA_MINUS = 2
} nvkit_polarization;

typedef struct nvkit_propagation_options {
  nvkit_polarization polarization;
  int decoherence;
  double readout_contrast;
} nvkit_propagation_options;

typedef struct nvkit_propagation_result {
  double ms0_population;
  double signal;
  double trace;
  double purity;
} nvkit_propagation_result;

NVKIT_API void nvkit_coherence_default(nvkit_coherence* out);
NVKIT_API void nvkit_propagation_options_default(nvkit_propagation_options* out);

NVKIT_API nvkit_status nvkit_sequence_create(nvkit_sequence** out);
NVKIT_API void nvkit_sequence_destroy(nvkit_sequence* seq);
NVKIT_API nvkit_status nvkit_sequence_add_laser(nvkit_sequence* seq, double duration);
NVKIT_API nvkit_status nvkit_sequence_add_pulse(nvkit_sequence* seq, double freq, double rabi_freq,
                                                double phase, double duration);
NVKIT_API nvkit_status nvkit_sequence_add_wait(nvkit_sequence* seq, double duration);
NVKIT_API nvkit_status nvkit_sequence_add_readout(nvkit_sequence* seq, double window);
NVKIT_API nvkit_status nvkit_sequence_length(const nvkit_sequence* seq, size_t* out);

/* `trajectory` (may be NULL) receives the ms=0 population after every
 * element; *count is set to the element count. */
NVKIT_API nvkit_status nvkit_sequence_propagate(const nvkit_spin_system* sys,
                                                const nvkit_environment* env,
                                                const nvkit_sequence* seq,
                                                const nvkit_coherence* coh,
                                                const nvkit_propagation_options* options,
                                                nvkit_propagation_result* result,
                                                double* trajectory, size_t capacity,
                                                size_t* count);

NVKIT_API nvkit_status nvkit_rabi_trace(const nvkit_spin_system* sys, const nvkit_environment* env,
                                        double mw_freq, double rabi_freq, const double* times,
                                        size_t n, const nvkit_coherence* coh,
                                        const nvkit_propagation_options* options,
                                        nvkit_curve** out);

typedef enum nvkit_branch { NVKIT_BRANCH_LOWER = 0, NVKIT_BRANCH_UPPER = 1 } nvkit_branch;

NVKIT_API nvkit_status nvkit_simulate_fid(const nvkit_spin_system* sys,
                                          const nvkit_environment* env,
                                          const nvkit_coherence* coh, double detuning,
                                          const double* times, size_t n, double amplitude,
                                          double baseline, nvkit_branch branch,
                                          nvkit_curve** out);
/* modulation < 0 selects the default bath modulation depth. */
NVKIT_API nvkit_status nvkit_simulate_hahn(const nvkit_coherence* coh, double larmor_freq,
                                           const double* times, size_t n, double amplitude,
                                           double baseline, double modulation,
                                           nvkit_curve** out);
NVKIT_API nvkit_status nvkit_simulate_t1(const nvkit_coherence* coh, const double* times, size_t n,
                                         double amplitude, double baseline, nvkit_curve** out);
NVKIT_API nvkit_status nvkit_larmor_13c(double b_mt, double* out);
NVKIT_API nvkit_status nvkit_modulation_depth(const nvkit_curve* curve, double* out);

typedef enum nvkit_envelope_model {
  NVKIT_ENVELOPE_STRETCHED = 0,
  NVKIT_ENVELOPE_SINGLE_EXP = 1,
  NVKIT_ENVELOPE_STRETCHED_TIMES_OSC = 2
} nvkit_envelope_model;

typedef struct nvkit_envelope_options {
  double n_lower, n_upper, n_initial;
  int oscillation_components;
} nvkit_envelope_options;

typedef struct nvkit_oscillation {
  double frequency;
  double amplitude;
} nvkit_oscillation;

typedef struct nvkit_envelope_result {
  double t_coh, n_stretch, amplitude, baseline;
  double t_coh_error, n_stretch_error, amplitude_error, baseline_error;
  double residual_norm;
  int converged;
  int iterations;
} nvkit_envelope_result;

NVKIT_API void nvkit_envelope_options_default(nvkit_envelope_options* out);
/* `oscillations` may be NULL; *n_oscillations receives the component count. */
NVKIT_API nvkit_status nvkit_decay_fit(const nvkit_curve* curve, nvkit_envelope_model model,
                                       const nvkit_envelope_options* options,
                                       nvkit_envelope_result* result,
                                       nvkit_oscillation* oscillations, size_t capacity,
                                       size_t* n_oscillations);
NVKIT_API nvkit_status nvkit_extract_frequencies(const nvkit_curve* curve, int max_components,
                                                 nvkit_oscillation* out, size_t capacity,
                                                 size_t* count);

/* ---- photon statistics --------------------------------------------------- */

typedef struct nvkit_g2_params {
  double tau0;
  double c1, tau1;
  double c2, tau2;
  double c3, tau3;
} nvkit_g2_params;

typedef struct nvkit_g2_fit_result {
  nvkit_g2_params params;
  nvkit_g2_params errors;
  double g2_at_tau0;
  double residual_norm;
  int converged;
  int iterations;
} nvkit_g2_fit_result;

NVKIT_API nvkit_status nvkit_g2_model(double tau, const nvkit_g2_params* params, double* out);
NVKIT_API nvkit_status nvkit_g2_synthesize(const nvkit_g2_params* params, const double* taus,
                                           size_t n, double noise_sigma, uint64_t seed,
                                           nvkit_curve** out);
/* `init` may be NULL. */
NVKIT_API nvkit_status nvkit_g2_fit(const nvkit_curve* curve, const nvkit_g2_params* init,
                                    nvkit_g2_fit_result* out);

typedef struct nvkit_saturation {
  double c_sat, p_sat, k_linear;
  double c_sat_error, p_sat_error;
  double residual_norm;
  int converged;
} nvkit_saturation;

NVKIT_API nvkit_status nvkit_saturation_fit(const nvkit_curve* points, nvkit_saturation* out);
NVKIT_API nvkit_status nvkit_saturation_model(double power_mw, const nvkit_saturation* fit,
                                              double* out);
NVKIT_API nvkit_status nvkit_saturation_calibrate(double power_mw, double rate, double p_sat,
                                                  nvkit_saturation* out);

/* ---- confocal maps and density ------------------------------------------- */

typedef struct nvkit_plmap nvkit_plmap;

typedef struct nvkit_slice_fit {
  double amplitude, center, fwhm, baseline;
  double amplitude_error, center_error, fwhm_error, baseline_error;
  double residual_norm;
  int converged;
  int iterations;
} nvkit_slice_fit;

/* axis_lengths[d] coordinates per axis, concatenated in `coords`; counts
 * row-major with the last axis fastest. */
NVKIT_API nvkit_status nvkit_plmap_create(int dims, const size_t* axis_lengths, const double* coords,
                                          const double* counts, double power_mw,
                                          nvkit_plmap** out);
NVKIT_API nvkit_status nvkit_plmap_load(const char* path, nvkit_plmap** out);
NVKIT_API nvkit_status nvkit_plmap_save(const nvkit_plmap* map, const char* path);
NVKIT_API void nvkit_plmap_destroy(nvkit_plmap* map);
NVKIT_API nvkit_status nvkit_plmap_dims(const nvkit_plmap* map, int* out);
NVKIT_API nvkit_status nvkit_plmap_power(const nvkit_plmap* map, double* out);
NVKIT_API nvkit_status nvkit_plmap_axis(const nvkit_plmap* map, int axis, double* out,
                                        size_t capacity, size_t* count);
NVKIT_API nvkit_status nvkit_plmap_counts(const nvkit_plmap* map, double* out, size_t capacity,
                                          size_t* count);
/* Fits the line along `axis` through grid indices `at` (dims entries; the
 * entry for `axis` is ignored). */
NVKIT_API nvkit_status nvkit_plmap_fit_slice(const nvkit_plmap* map, int axis, const size_t* at,
                                             nvkit_slice_fit* out);
NVKIT_API nvkit_status nvkit_fit_gaussian(const double* x, const double* y, size_t n,
                                          nvkit_slice_fit* out);

typedef struct nvkit_psf {
  double w_x, w_y, w_z; /* FWHM, µm */
} nvkit_psf;

typedef enum nvkit_density_method {
  NVKIT_DENSITY_GAUSSIAN = 0,
  NVKIT_DENSITY_UNIFORM = 1
} nvkit_density_method;

typedef struct nvkit_density {
  double number_density; /* NV / µm^3 */
  double ppb;
  double effective_volume; /* µm^3 */
  int default_psf;         /* the PSF equals the built-in assumed default */
} nvkit_density;

NVKIT_API void nvkit_psf_default(nvkit_psf* out);
NVKIT_API nvkit_status nvkit_estimate_density(double c_ensemble, double c_single,
                                              const nvkit_psf* psf, nvkit_density_method method,
                                              nvkit_density* out);
NVKIT_API nvkit_status nvkit_enhancement_ratio(double region_a, double region_b, double* out);
NVKIT_API nvkit_status nvkit_density_to_ppb(double per_um3, double* out);
NVKIT_API nvkit_status nvkit_ppb_to_density(double ppb, double* out);

/* ---- magnetometry -------------------------------------------------------- */

typedef struct nvkit_sensor {
  double count_rate;     /* counts/s */
  double contrast;       /* (0, 1) */
  double readout_window; /* time unit below */
  double t2_star;
  double t2;
  double time_unit_s;    /* seconds per time unit, 1e-6 for µs */
} nvkit_sensor;

typedef struct nvkit_sensitivity_report {
  double eta_dc; /* nT/sqrt(Hz) */
  double eta_ac;
  double hbar, lande_g, bohr_magneton;
  int t2_inconsistency_flag; /* ensemble T2 1.53 vs 1.63 µs */
} nvkit_sensitivity_report;

NVKIT_API nvkit_status nvkit_sensitivity(const nvkit_sensor* sensor, nvkit_sensitivity_report* out);

#ifdef __cplusplus
}
#endif

#endif /* NVKIT_NVKIT_H */
