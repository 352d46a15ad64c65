#include "nvkit/nvkit.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <exception>
#include <new>
#include <string>
#include <variant>

#include "confocal.hpp"
#include "dynamics.hpp"
#include "error.hpp"
#include "formats.hpp"
#include "magnetometry.hpp"
#include "odmr.hpp"
#include "photon_stats.hpp"
#include "spin_model.hpp"

using namespace nvkit;

struct nvkit_spin_system {
  spin::SpinSystem value;
};

struct nvkit_curve {
  nvkit_curve_kind kind = NVKIT_CURVE_ODMR_CW;
  std::vector<double> x, y, sigma;
};

struct nvkit_odmr_fit {
  odmr::OdmrFitResult value;
};

struct nvkit_sequence {
  dynamics::PulseSequence value;
};

struct nvkit_plmap {
  confocal::PLMap value;
};

namespace {

thread_local std::string g_last_error;

nvkit_status fail(nvkit_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

nvkit_status map_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return NVKIT_ERR_INVALID_ARGUMENT;
    case ErrorCode::Parse: return NVKIT_ERR_PARSE;
    case ErrorCode::Io: return NVKIT_ERR_IO;
    case ErrorCode::Numeric: return NVKIT_ERR_NUMERIC;
  }
  return NVKIT_ERR_INTERNAL;
}

struct BufferTooSmall : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class F>
nvkit_status guard(F&& body) {
  try {
    g_last_error.clear();
    body();
    return NVKIT_OK;
  } catch (const BufferTooSmall& e) {
    return fail(NVKIT_ERR_BUFFER_TOO_SMALL, e.what());
  } catch (const Error& e) {
    return fail(map_code(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(NVKIT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(NVKIT_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(NVKIT_ERR_INTERNAL, "unknown error");
  }
}

void need(const void* p, const char* name) {
  if (p == nullptr) throw InvalidArgument(std::string(name) + " must not be NULL");
}

// Copies `src` into a caller buffer; `count` always receives the full size.
template <class T>
void copy_out(const std::vector<T>& src, T* out, std::size_t capacity, std::size_t* count) {
  if (count != nullptr) *count = src.size();
  if (out == nullptr) return;
  if (capacity < src.size()) throw BufferTooSmall("output buffer too small");
  std::copy(src.begin(), src.end(), out);
}

spin::FieldEnvironment to_env(const nvkit_environment* env) {
  spin::FieldEnvironment e;
  if (env == nullptr) return e;
  e.b_lab = Vec3(env->b_lab[0], env->b_lab[1], env->b_lab[2]);
  e.shift_xi = env->xi;
  e.splitting_delta = env->delta;
  return e;
}

std::vector<double> to_vector(const double* p, std::size_t n) {
  if (n > 0) need(p, "array");
  return std::vector<double>(p, p + n);
}

dynamics::CoherenceParams to_coh(const nvkit_coherence* c) {
  dynamics::CoherenceParams out;
  if (c == nullptr) return out;
  out.t1_ms = c->t1_ms;
  out.t2_us = c->t2_us;
  out.t2_star_us = c->t2_star_us;
  out.t_rho_rabi_us = c->t_rho_rabi_us;
  out.n_stretch = c->n_stretch;
  return out;
}

dynamics::PropagationOptions to_prop(const nvkit_propagation_options* o) {
  dynamics::PropagationOptions out;
  if (o == nullptr) return out;
  switch (o->polarization) {
    case NVKIT_POL_LINEAR: out.polarization = dynamics::Polarization::Linear; break;
    case NVKIT_POL_SIGMA_PLUS: out.polarization = dynamics::Polarization::SigmaPlus; break;
    case NVKIT_POL_SIGMA_MINUS: out.polarization = dynamics::Polarization::SigmaMinus; break;
    default: throw InvalidArgument("unknown polarization");
  }
  out.decoherence = o->decoherence != 0;
  out.readout_contrast = o->readout_contrast;
  return out;
}

bool is_decay(nvkit_curve_kind k) {
  return k == NVKIT_CURVE_RABI || k == NVKIT_CURVE_FID || k == NVKIT_CURVE_HAHN ||
         k == NVKIT_CURVE_T1;
}

dynamics::CurveKind to_decay_kind(nvkit_curve_kind k) {
  switch (k) {
    case NVKIT_CURVE_RABI: return dynamics::CurveKind::Rabi;
    case NVKIT_CURVE_FID: return dynamics::CurveKind::Fid;
    case NVKIT_CURVE_HAHN: return dynamics::CurveKind::Hahn;
    case NVKIT_CURVE_T1: return dynamics::CurveKind::T1;
    default: throw InvalidArgument("curve is not a time-domain decay curve");
  }
}

nvkit_curve_kind from_decay_kind(dynamics::CurveKind k) {
  switch (k) {
    case dynamics::CurveKind::Rabi: return NVKIT_CURVE_RABI;
    case dynamics::CurveKind::Fid: return NVKIT_CURVE_FID;
    case dynamics::CurveKind::Hahn: return NVKIT_CURVE_HAHN;
    case dynamics::CurveKind::T1: return NVKIT_CURVE_T1;
  }
  return NVKIT_CURVE_RABI;
}

nvkit_curve* from_decay(const dynamics::DecayCurve& c) {
  auto* out = new nvkit_curve;
  out->kind = from_decay_kind(c.kind);
  out->x = c.times;
  out->y = c.signal;
  out->sigma = c.sigma;
  return out;
}

dynamics::DecayCurve to_decay(const nvkit_curve& c) {
  dynamics::DecayCurve d;
  d.kind = to_decay_kind(c.kind);
  d.times = c.x;
  d.signal = c.y;
  d.sigma = c.sigma;
  return d;
}

odmr::OdmrSpectrum to_spectrum(const nvkit_curve& c) {
  if (c.kind != NVKIT_CURVE_ODMR_CW && c.kind != NVKIT_CURVE_ODMR_PULSED)
    throw InvalidArgument("curve is not an ODMR spectrum");
  odmr::OdmrSpectrum s;
  s.mode = c.kind == NVKIT_CURVE_ODMR_CW ? odmr::Mode::Cw : odmr::Mode::Pulsed;
  s.freqs = c.x;
  s.signal = c.y;
  s.sigma = c.sigma;
  return s;
}

photon::G2Curve to_g2(const nvkit_curve& c) {
  if (c.kind != NVKIT_CURVE_G2) throw InvalidArgument("curve is not a g2 curve");
  return {c.x, c.y, c.sigma};
}

photon::G2Params to_g2_params(const nvkit_g2_params& p) {
  photon::G2Params out;
  out.tau0 = p.tau0;
  out.c1 = p.c1;
  out.tau1 = p.tau1;
  out.c2 = p.c2;
  out.tau2 = p.tau2;
  out.c3 = p.c3;
  out.tau3 = p.tau3;
  return out;
}

nvkit_g2_params from_g2_params(const photon::G2Params& p) {
  return {p.tau0, p.c1, p.tau1, p.c2, p.tau2, p.c3, p.tau3};
}

nvkit_slice_fit from_slice(const confocal::GaussianSliceFit& f) {
  nvkit_slice_fit out{};
  out.amplitude = f.amplitude;
  out.center = f.center;
  out.fwhm = f.fwhm;
  out.baseline = f.baseline;
  out.amplitude_error = f.amplitude_error;
  out.center_error = f.center_error;
  out.fwhm_error = f.fwhm_error;
  out.baseline_error = f.baseline_error;
  out.residual_norm = f.residual_norm;
  out.converged = f.converged ? 1 : 0;
  out.iterations = f.iterations;
  return out;
}

nvkit_saturation from_saturation(const photon::SaturationFit& f) {
  nvkit_saturation out{};
  out.c_sat = f.c_sat;
  out.p_sat = f.p_sat;
  out.k_linear = f.k_linear;
  out.c_sat_error = f.c_sat_error;
  out.p_sat_error = f.p_sat_error;
  out.residual_norm = f.residual_norm;
  out.converged = f.converged ? 1 : 0;
  return out;
}

}  // namespace

extern "C" {

const char* nvkit_last_error(void) { return g_last_error.c_str(); }

const char* nvkit_status_name(nvkit_status status) {
  switch (status) {
    case NVKIT_OK: return "ok";
    case NVKIT_ERR_INVALID_ARGUMENT: return "invalid argument";
    case NVKIT_ERR_PARSE: return "parse error";
    case NVKIT_ERR_IO: return "i/o error";
    case NVKIT_ERR_NUMERIC: return "numeric error";
    case NVKIT_ERR_BUFFER_TOO_SMALL: return "buffer too small";
    case NVKIT_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* nvkit_version(void) { return "1.0.0"; }

// ---- spin model

nvkit_status nvkit_spin_system_create(nvkit_spin_system** out) {
  return guard([&] {
    need(out, "out");
    *out = new nvkit_spin_system;
  });
}

void nvkit_spin_system_destroy(nvkit_spin_system* sys) { delete sys; }

nvkit_status nvkit_spin_system_set_zfs(nvkit_spin_system* sys, double d_mhz) {
  return guard([&] {
    need(sys, "sys");
    require(std::isfinite(d_mhz), "zero-field splitting must be finite");
    sys->value.d_zfs = d_mhz;
  });
}

nvkit_status nvkit_spin_system_set_orientation(nvkit_spin_system* sys, int index) {
  return guard([&] {
    need(sys, "sys");
    sys->value.orientation = spin::NvOrientation::from_index(index);
  });
}

nvkit_status nvkit_spin_system_add_nucleus(nvkit_spin_system* sys, nvkit_species species,
                                           double a_parallel, double a_perp) {
  return guard([&] {
    need(sys, "sys");
    require(species == NVKIT_N14 || species == NVKIT_C13, "unknown nuclear species");
    spin::HyperfineCoupling h;
    h.species = species == NVKIT_N14 ? spin::NuclearSpecies::N14 : spin::NuclearSpecies::C13;
    h.a_parallel = a_parallel;
    h.a_perp = a_perp;
    spin::SpinSystem trial = sys->value;
    trial.nuclei.push_back(h);
    trial.validate();
    sys->value = std::move(trial);
  });
}

nvkit_status nvkit_spin_system_dimension(const nvkit_spin_system* sys, int* out) {
  return guard([&] {
    need(sys, "sys");
    need(out, "out");
    *out = sys->value.hilbert_dimension();
  });
}

nvkit_status nvkit_eigenvalues(const nvkit_spin_system* sys, const nvkit_environment* env,
                               double* out, size_t capacity, size_t* count) {
  return guard([&] {
    need(sys, "sys");
    const auto eig = spin::eigenlevels(spin::build_hamiltonian(sys->value, to_env(env)));
    const std::vector<double> v(eig.values.data(), eig.values.data() + eig.values.size());
    copy_out(v, out, capacity, count);
  });
}

nvkit_status nvkit_transitions(const nvkit_spin_system* sys, const nvkit_environment* env,
                               nvkit_transition* out, size_t capacity, size_t* count) {
  return guard([&] {
    need(sys, "sys");
    const auto lines = spin::transitions(sys->value, to_env(env));
    std::vector<nvkit_transition> v;
    for (const auto& l : lines) v.push_back({l.frequency, l.strength});
    copy_out(v, out, capacity, count);
  });
}

nvkit_status nvkit_resonances_approx(double d, double xi, double delta, double* v_minus,
                                     double* v_plus) {
  return guard([&] {
    need(v_minus, "v_minus");
    need(v_plus, "v_plus");
    const auto [a, b] = spin::resonance_frequencies_approx(d, xi, delta);
    *v_minus = a;
    *v_plus = b;
  });
}

nvkit_status nvkit_invert_shift_splitting(double v_minus, double v_plus, double d, double* xi,
                                          double* delta) {
  return guard([&] {
    need(xi, "xi");
    need(delta, "delta");
    const auto [a, b] = odmr::invert_shift_splitting(v_minus, v_plus, d);
    *xi = a;
    *delta = b;
  });
}

// ---- curves

nvkit_status nvkit_curve_create(nvkit_curve_kind kind, const double* x, const double* y,
                                const double* sigma, size_t n, nvkit_curve** out) {
  return guard([&] {
    need(out, "out");
    require(kind >= NVKIT_CURVE_ODMR_CW && kind <= NVKIT_CURVE_SATURATION, "unknown curve kind");
    auto c = std::make_unique<nvkit_curve>();
    c->kind = kind;
    c->x = to_vector(x, n);
    c->y = to_vector(y, n);
    c->sigma = sigma != nullptr ? to_vector(sigma, n) : std::vector<double>(n, 0.0);
    *out = c.release();
  });
}

nvkit_status nvkit_curve_load(const char* path, nvkit_curve_kind kind, nvkit_curve** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    const std::string text = formats::read_file(path);
    auto c = std::make_unique<nvkit_curve>();
    if (kind == NVKIT_CURVE_ODMR_CW || kind == NVKIT_CURVE_ODMR_PULSED) {
      const auto s = formats::parse_spectrum(text, path);
      c->kind = s.mode == odmr::Mode::Cw ? NVKIT_CURVE_ODMR_CW : NVKIT_CURVE_ODMR_PULSED;
      c->x = s.freqs;
      c->y = s.signal;
      c->sigma = s.sigma;
    } else if (is_decay(kind)) {
      const auto d = formats::parse_decay(text, path);
      c.reset(from_decay(d));
    } else if (kind == NVKIT_CURVE_G2) {
      const auto g = formats::parse_g2(text, path);
      c->kind = NVKIT_CURVE_G2;
      c->x = g.taus;
      c->y = g.g2;
      c->sigma = g.sigma;
    } else if (kind == NVKIT_CURVE_SATURATION) {
      const auto pts = formats::parse_saturation(text, path);
      c->kind = NVKIT_CURVE_SATURATION;
      for (const auto& p : pts) {
        c->x.push_back(p.power_mw);
        c->y.push_back(p.rate);
        c->sigma.push_back(0.0);
      }
    } else {
      throw InvalidArgument("unknown curve kind");
    }
    *out = c.release();
  });
}

nvkit_status nvkit_curve_save(const nvkit_curve* curve, const char* path) {
  return guard([&] {
    need(curve, "curve");
    need(path, "path");
    std::string text;
    if (curve->kind == NVKIT_CURVE_ODMR_CW || curve->kind == NVKIT_CURVE_ODMR_PULSED) {
      text = formats::format_spectrum(to_spectrum(*curve));
    } else if (is_decay(curve->kind)) {
      text = formats::format_decay(to_decay(*curve));
    } else if (curve->kind == NVKIT_CURVE_G2) {
      text = formats::format_g2(to_g2(*curve));
    } else {
      std::vector<photon::SaturationPoint> pts;
      for (std::size_t i = 0; i < curve->x.size(); ++i) pts.push_back({curve->x[i], curve->y[i]});
      text = formats::format_saturation(pts);
    }
    formats::write_file(path, text);
  });
}

void nvkit_curve_destroy(nvkit_curve* curve) { delete curve; }

nvkit_status nvkit_curve_kind_of(const nvkit_curve* curve, nvkit_curve_kind* out) {
  return guard([&] {
    need(curve, "curve");
    need(out, "out");
    *out = curve->kind;
  });
}

nvkit_status nvkit_curve_size(const nvkit_curve* curve, size_t* out) {
  return guard([&] {
    need(curve, "curve");
    need(out, "out");
    *out = curve->x.size();
  });
}

nvkit_status nvkit_curve_data(const nvkit_curve* curve, double* x, double* y, double* sigma,
                              size_t capacity) {
  return guard([&] {
    need(curve, "curve");
    if (capacity < curve->x.size()) throw BufferTooSmall("curve buffer too small");
    if (x) std::copy(curve->x.begin(), curve->x.end(), x);
    if (y) std::copy(curve->y.begin(), curve->y.end(), y);
    if (sigma) std::copy(curve->sigma.begin(), curve->sigma.end(), sigma);
  });
}

nvkit_status nvkit_curve_add_noise(nvkit_curve* curve, double sigma, uint64_t seed) {
  return guard([&] {
    need(curve, "curve");
    dynamics::DecayCurve tmp;
    tmp.times = curve->x;
    tmp.signal = curve->y;
    tmp.sigma = curve->sigma;
    dynamics::add_gaussian_noise(tmp, sigma, seed);
    curve->y = std::move(tmp.signal);
    curve->sigma = std::move(tmp.sigma);
  });
}

// ---- ODMR

void nvkit_odmr_options_default(nvkit_odmr_options* out) {
  if (out == nullptr) return;
  const odmr::SynthesisOptions d;
  *out = nvkit_odmr_options{};
  out->pulsed = 0;
  out->fwhm = d.fwhm;
  out->contrast = d.contrast;
  out->lower_branch_weight = d.lower_branch_weight;
  out->baseline = d.baseline;
  out->ensemble = 0;
  out->noise = NVKIT_NOISE_NONE;
}

nvkit_status nvkit_odmr_synthesize(const nvkit_spin_system* sys, const nvkit_environment* env,
                                   const nvkit_odmr_options* options, const double* grid,
                                   size_t n, nvkit_curve** out) {
  return guard([&] {
    need(sys, "sys");
    need(out, "out");
    nvkit_odmr_options o;
    nvkit_odmr_options_default(&o);
    if (options != nullptr) o = *options;
    odmr::SynthesisOptions s;
    s.mode = o.pulsed ? odmr::Mode::Pulsed : odmr::Mode::Cw;
    s.fwhm = o.fwhm;
    s.contrast = o.contrast;
    s.lower_branch_weight = o.lower_branch_weight;
    s.baseline = o.baseline;
    s.ensemble = o.ensemble != 0;
    switch (o.noise) {
      case NVKIT_NOISE_NONE: s.noise.kind = odmr::NoiseSpec::Kind::None; break;
      case NVKIT_NOISE_GAUSSIAN: s.noise.kind = odmr::NoiseSpec::Kind::Gaussian; break;
      case NVKIT_NOISE_POISSON: s.noise.kind = odmr::NoiseSpec::Kind::Poisson; break;
      default: throw InvalidArgument("unknown noise kind");
    }
    s.noise.sigma = o.noise_sigma;
    s.noise.counts_per_point = o.counts_per_point;
    s.noise.seed = o.seed;
    const std::vector<double> g = to_vector(grid, n);
    const auto spec = odmr::synthesize_spectrum(sys->value, to_env(env), s, g);
    auto c = std::make_unique<nvkit_curve>();
    c->kind = o.pulsed ? NVKIT_CURVE_ODMR_PULSED : NVKIT_CURVE_ODMR_CW;
    c->x = spec.freqs;
    c->y = spec.signal;
    c->sigma = spec.sigma;
    *out = c.release();
  });
}

nvkit_status nvkit_odmr_fit_run(const nvkit_curve* spectrum, int n_dips, const nvkit_dip* init,
                                double init_baseline, double d_reference, nvkit_odmr_fit** out) {
  return guard([&] {
    need(spectrum, "spectrum");
    need(out, "out");
    std::optional<odmr::LineShapeModel> model;
    if (init != nullptr) {
      require(n_dips >= 1, "n_dips must be at least 1");
      odmr::LineShapeModel m;
      m.baseline = init_baseline;
      for (int i = 0; i < n_dips; ++i) {
        m.centers.push_back(init[i].center);
        m.contrasts.push_back(init[i].contrast);
        m.fwhms.push_back(init[i].fwhm);
      }
      model = m;
    }
    auto f = std::make_unique<nvkit_odmr_fit>();
    f->value = odmr::fit_spectrum(to_spectrum(*spectrum), n_dips, model, d_reference);
    *out = f.release();
  });
}

void nvkit_odmr_fit_destroy(nvkit_odmr_fit* fit) { delete fit; }

nvkit_status nvkit_odmr_fit_summary(const nvkit_odmr_fit* fit, nvkit_odmr_summary* out) {
  return guard([&] {
    need(fit, "fit");
    need(out, "out");
    const auto& r = fit->value;
    *out = nvkit_odmr_summary{};
    out->n_dips = r.model.size();
    out->baseline = r.model.baseline;
    out->baseline_error = r.baseline_error;
    out->d_fit = r.d_fit;
    out->xi_fit = r.xi_fit;
    out->delta_fit = r.delta_fit;
    out->delta_half_separation = r.delta_half_separation;
    out->v_minus = r.v_minus;
    out->v_plus = r.v_plus;
    out->residual_norm = r.residual_norm;
    out->converged = r.converged ? 1 : 0;
    out->iterations = r.iterations;
  });
}

nvkit_status nvkit_odmr_fit_dip(const nvkit_odmr_fit* fit, size_t index, nvkit_dip* out) {
  return guard([&] {
    need(fit, "fit");
    need(out, "out");
    const auto& r = fit->value;
    require(index < r.model.size(), "dip index out of range");
    out->center = r.model.centers[index];
    out->contrast = r.model.contrasts[index];
    out->fwhm = r.model.fwhms[index];
    out->center_error = r.center_errors[index];
    out->contrast_error = r.contrast_errors[index];
    out->fwhm_error = r.fwhm_errors[index];
  });
}

nvkit_status nvkit_odmr_fit_evaluate(const nvkit_odmr_fit* fit, double freq, double* out) {
  return guard([&] {
    need(fit, "fit");
    need(out, "out");
    *out = fit->value.model.evaluate(freq);
  });
}

// ---- dynamics

void nvkit_coherence_default(nvkit_coherence* out) {
  if (out == nullptr) return;
  const dynamics::CoherenceParams d;
  *out = {d.t1_ms, d.t2_us, d.t2_star_us, d.t_rho_rabi_us, d.n_stretch};
}

void nvkit_propagation_options_default(nvkit_propagation_options* out) {
  if (out == nullptr) return;
  const dynamics::PropagationOptions d;
  *out = {NVKIT_POL_LINEAR, d.decoherence ? 1 : 0, d.readout_contrast};
}

nvkit_status nvkit_sequence_create(nvkit_sequence** out) {
  return guard([&] {
    need(out, "out");
    *out = new nvkit_sequence;
  });
}

void nvkit_sequence_destroy(nvkit_sequence* seq) { delete seq; }

nvkit_status nvkit_sequence_add_laser(nvkit_sequence* seq, double duration) {
  return guard([&] {
    need(seq, "seq");
    seq->value.laser(duration);
  });
}

nvkit_status nvkit_sequence_add_pulse(nvkit_sequence* seq, double freq, double rabi_freq,
                                      double phase, double duration) {
  return guard([&] {
    need(seq, "seq");
    seq->value.pulse(freq, rabi_freq, phase, duration);
  });
}

nvkit_status nvkit_sequence_add_wait(nvkit_sequence* seq, double duration) {
  return guard([&] {
    need(seq, "seq");
    seq->value.wait(duration);
  });
}

nvkit_status nvkit_sequence_add_readout(nvkit_sequence* seq, double window) {
  return guard([&] {
    need(seq, "seq");
    seq->value.readout(window);
  });
}

nvkit_status nvkit_sequence_length(const nvkit_sequence* seq, size_t* out) {
  return guard([&] {
    need(seq, "seq");
    need(out, "out");
    *out = seq->value.elements.size();
  });
}

nvkit_status nvkit_sequence_propagate(const nvkit_spin_system* sys, const nvkit_environment* env,
                                      const nvkit_sequence* seq, const nvkit_coherence* coh,
                                      const nvkit_propagation_options* options,
                                      nvkit_propagation_result* result, double* trajectory,
                                      size_t capacity, size_t* count) {
  return guard([&] {
    need(sys, "sys");
    need(seq, "seq");
    need(result, "result");
    if (trajectory != nullptr && capacity < seq->value.elements.size())
      throw BufferTooSmall("trajectory buffer too small");
    dynamics::PropagationOptions o = to_prop(options);
    o.record_trajectory = trajectory != nullptr;
    const auto r = dynamics::propagate_sequence(sys->value, to_env(env), seq->value, to_coh(coh), o);
    *result = {r.ms0_population, r.signal, r.trace, r.purity};
    if (count != nullptr) *count = seq->value.elements.size();
    if (trajectory != nullptr) std::copy(r.trajectory.begin(), r.trajectory.end(), trajectory);
  });
}

nvkit_status nvkit_rabi_trace(const nvkit_spin_system* sys, const nvkit_environment* env,
                              double mw_freq, double rabi_freq, const double* times, size_t n,
                              const nvkit_coherence* coh, const nvkit_propagation_options* options,
                              nvkit_curve** out) {
  return guard([&] {
    need(sys, "sys");
    need(out, "out");
    const auto t = to_vector(times, n);
    *out = from_decay(dynamics::rabi_trace(sys->value, to_env(env), mw_freq, rabi_freq, t,
                                           to_coh(coh), to_prop(options)));
  });
}

nvkit_status nvkit_simulate_fid(const nvkit_spin_system* sys, const nvkit_environment* env,
                                const nvkit_coherence* coh, double detuning, const double* times,
                                size_t n, double amplitude, double baseline, nvkit_branch branch,
                                nvkit_curve** out) {
  return guard([&] {
    need(sys, "sys");
    need(out, "out");
    const auto t = to_vector(times, n);
    *out = from_decay(dynamics::simulate_fid(
        sys->value, to_env(env), to_coh(coh), detuning, t, {amplitude, baseline},
        branch == NVKIT_BRANCH_UPPER ? dynamics::Branch::Upper : dynamics::Branch::Lower));
  });
}

nvkit_status nvkit_simulate_hahn(const nvkit_coherence* coh, double larmor_freq,
                                 const double* times, size_t n, double amplitude, double baseline,
                                 double modulation, nvkit_curve** out) {
  return guard([&] {
    need(out, "out");
    const auto t = to_vector(times, n);
    *out = from_decay(dynamics::simulate_hahn(
        to_coh(coh), larmor_freq, t, {amplitude, baseline},
        modulation < 0.0 ? dynamics::kHahnModulationDepth : modulation));
  });
}

nvkit_status nvkit_simulate_t1(const nvkit_coherence* coh, const double* times, size_t n,
                               double amplitude, double baseline, nvkit_curve** out) {
  return guard([&] {
    need(out, "out");
    const auto t = to_vector(times, n);
    *out = from_decay(dynamics::simulate_relaxometry(to_coh(coh), t, {amplitude, baseline}));
  });
}

nvkit_status nvkit_larmor_13c(double b_mt, double* out) {
  return guard([&] {
    need(out, "out");
    require(std::isfinite(b_mt), "field must be finite");
    *out = dynamics::larmor_13c(b_mt);
  });
}

nvkit_status nvkit_modulation_depth(const nvkit_curve* curve, double* out) {
  return guard([&] {
    need(curve, "curve");
    need(out, "out");
    *out = dynamics::modulation_depth(curve->x, curve->y);
  });
}

void nvkit_envelope_options_default(nvkit_envelope_options* out) {
  if (out == nullptr) return;
  const dynamics::EnvelopeFitOptions d;
  *out = {d.n_lower, d.n_upper, d.n_initial, d.oscillation_components};
}

nvkit_status nvkit_decay_fit(const nvkit_curve* curve, nvkit_envelope_model model,
                             const nvkit_envelope_options* options, nvkit_envelope_result* result,
                             nvkit_oscillation* oscillations, size_t capacity,
                             size_t* n_oscillations) {
  return guard([&] {
    need(curve, "curve");
    need(result, "result");
    dynamics::EnvelopeFitOptions o;
    if (options != nullptr) {
      o.n_lower = options->n_lower;
      o.n_upper = options->n_upper;
      o.n_initial = options->n_initial;
      o.oscillation_components = options->oscillation_components;
    }
    dynamics::EnvelopeModel m;
    switch (model) {
      case NVKIT_ENVELOPE_STRETCHED: m = dynamics::EnvelopeModel::Stretched; break;
      case NVKIT_ENVELOPE_SINGLE_EXP: m = dynamics::EnvelopeModel::SingleExp; break;
      case NVKIT_ENVELOPE_STRETCHED_TIMES_OSC: m = dynamics::EnvelopeModel::StretchedTimesOsc; break;
      default: throw InvalidArgument("unknown envelope model");
    }
    const auto f = dynamics::fit_decay_envelope(to_decay(*curve), m, o);
    *result = nvkit_envelope_result{};
    result->t_coh = f.t_coh;
    result->n_stretch = f.n_stretch;
    result->amplitude = f.amplitude;
    result->baseline = f.baseline;
    result->t_coh_error = f.t_coh_error;
    result->n_stretch_error = f.n_stretch_error;
    result->amplitude_error = f.amplitude_error;
    result->baseline_error = f.baseline_error;
    result->residual_norm = f.residual_norm;
    result->converged = f.converged ? 1 : 0;
    result->iterations = f.iterations;
    std::vector<nvkit_oscillation> osc;
    for (const auto& c : f.oscillations) osc.push_back({c.frequency, c.amplitude});
    copy_out(osc, oscillations, capacity, n_oscillations);
  });
}

nvkit_status nvkit_extract_frequencies(const nvkit_curve* curve, int max_components,
                                       nvkit_oscillation* out, size_t capacity, size_t* count) {
  return guard([&] {
    need(curve, "curve");
    dynamics::DecayCurve d;
    d.times = curve->x;
    d.signal = curve->y;
    d.sigma = curve->sigma;
    std::vector<nvkit_oscillation> osc;
    for (const auto& c : dynamics::extract_frequencies(d, max_components))
      osc.push_back({c.frequency, c.amplitude});
    copy_out(osc, out, capacity, count);
  });
}

// ---- photon statistics

nvkit_status nvkit_g2_model(double tau, const nvkit_g2_params* params, double* out) {
  return guard([&] {
    need(params, "params");
    need(out, "out");
    const auto p = to_g2_params(*params);
    p.validate();
    *out = photon::g2_model(tau, p);
  });
}

nvkit_status nvkit_g2_synthesize(const nvkit_g2_params* params, const double* taus, size_t n,
                                 double noise_sigma, uint64_t seed, nvkit_curve** out) {
  return guard([&] {
    need(params, "params");
    need(out, "out");
    const auto p = to_g2_params(*params);
    p.validate();
    require(noise_sigma >= 0.0, "noise sigma must be non-negative");
    auto c = std::make_unique<nvkit_curve>();
    c->kind = NVKIT_CURVE_G2;
    c->x = to_vector(taus, n);
    for (double t : c->x) c->y.push_back(photon::g2_model(t, p));
    c->sigma.assign(n, 0.0);
    if (noise_sigma > 0.0) {
      dynamics::DecayCurve tmp;
      tmp.times = c->x;
      tmp.signal = c->y;
      tmp.sigma = c->sigma;
      dynamics::add_gaussian_noise(tmp, noise_sigma, seed);
      c->y = tmp.signal;
      c->sigma = tmp.sigma;
    }
    *out = c.release();
  });
}

nvkit_status nvkit_g2_fit(const nvkit_curve* curve, const nvkit_g2_params* init,
                          nvkit_g2_fit_result* out) {
  return guard([&] {
    need(curve, "curve");
    need(out, "out");
    std::optional<photon::G2Params> start;
    if (init != nullptr) start = to_g2_params(*init);
    const auto r = photon::fit_g2(to_g2(*curve), start);
    *out = nvkit_g2_fit_result{};
    out->params = from_g2_params(r.params);
    out->errors = from_g2_params(r.errors);
    out->g2_at_tau0 = photon::g2_at_zero_delay(r.params);
    out->residual_norm = r.residual_norm;
    out->converged = r.converged ? 1 : 0;
    out->iterations = r.iterations;
  });
}

nvkit_status nvkit_saturation_fit(const nvkit_curve* points, nvkit_saturation* out) {
  return guard([&] {
    need(points, "points");
    need(out, "out");
    require(points->kind == NVKIT_CURVE_SATURATION, "curve is not a saturation curve");
    std::vector<photon::SaturationPoint> pts;
    for (std::size_t i = 0; i < points->x.size(); ++i) pts.push_back({points->x[i], points->y[i]});
    *out = from_saturation(photon::fit_saturation(pts));
  });
}

nvkit_status nvkit_saturation_model(double power_mw, const nvkit_saturation* fit, double* out) {
  return guard([&] {
    need(fit, "fit");
    need(out, "out");
    *out = photon::saturation_model(power_mw, photon::make_saturation(fit->c_sat, fit->p_sat));
  });
}

nvkit_status nvkit_saturation_calibrate(double power_mw, double rate, double p_sat,
                                        nvkit_saturation* out) {
  return guard([&] {
    need(out, "out");
    *out = from_saturation(
        photon::make_saturation(photon::calibrate_c_sat(power_mw, rate, p_sat), p_sat));
  });
}

// ---- confocal

nvkit_status nvkit_plmap_create(int dims, const size_t* axis_lengths, const double* coords,
                                const double* counts, double power_mw, nvkit_plmap** out) {
  return guard([&] {
    need(out, "out");
    need(axis_lengths, "axis_lengths");
    require(dims == 2 || dims == 3, "map must be 2D or 3D");
    auto m = std::make_unique<nvkit_plmap>();
    std::size_t offset = 0;
    std::size_t total = 1;
    for (int d = 0; d < dims; ++d) {
      const std::size_t n = axis_lengths[d];
      m->value.axes.push_back(to_vector(coords + offset, n));
      offset += n;
      total *= n;
    }
    m->value.counts = to_vector(counts, total);
    m->value.power_mw = power_mw;
    m->value.validate();
    *out = m.release();
  });
}

nvkit_status nvkit_plmap_load(const char* path, nvkit_plmap** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    auto m = std::make_unique<nvkit_plmap>();
    m->value = confocal::load_map(path);
    *out = m.release();
  });
}

nvkit_status nvkit_plmap_save(const nvkit_plmap* map, const char* path) {
  return guard([&] {
    need(map, "map");
    need(path, "path");
    confocal::save_map(map->value, path);
  });
}

void nvkit_plmap_destroy(nvkit_plmap* map) { delete map; }

nvkit_status nvkit_plmap_dims(const nvkit_plmap* map, int* out) {
  return guard([&] {
    need(map, "map");
    need(out, "out");
    *out = map->value.dims();
  });
}

nvkit_status nvkit_plmap_power(const nvkit_plmap* map, double* out) {
  return guard([&] {
    need(map, "map");
    need(out, "out");
    *out = map->value.power_mw;
  });
}

nvkit_status nvkit_plmap_axis(const nvkit_plmap* map, int axis, double* out, size_t capacity,
                              size_t* count) {
  return guard([&] {
    need(map, "map");
    require(axis >= 0 && axis < map->value.dims(), "axis out of range");
    copy_out(map->value.axes[static_cast<std::size_t>(axis)], out, capacity, count);
  });
}

nvkit_status nvkit_plmap_counts(const nvkit_plmap* map, double* out, size_t capacity,
                                size_t* count) {
  return guard([&] {
    need(map, "map");
    copy_out(map->value.counts, out, capacity, count);
  });
}

nvkit_status nvkit_plmap_fit_slice(const nvkit_plmap* map, int axis, const size_t* at,
                                   nvkit_slice_fit* out) {
  return guard([&] {
    need(map, "map");
    need(at, "at");
    need(out, "out");
    std::vector<std::size_t> idx(at, at + map->value.dims());
    idx[static_cast<std::size_t>(std::clamp(axis, 0, map->value.dims() - 1))] = 0;
    *out = from_slice(confocal::fit_gaussian_slice(map->value, axis, idx));
  });
}

nvkit_status nvkit_fit_gaussian(const double* x, const double* y, size_t n, nvkit_slice_fit* out) {
  return guard([&] {
    need(out, "out");
    *out = from_slice(confocal::fit_gaussian(to_vector(x, n), to_vector(y, n)));
  });
}

void nvkit_psf_default(nvkit_psf* out) {
  if (out == nullptr) return;
  const confocal::PsfModel d;
  *out = {d.w_x, d.w_y, d.w_z};
}

nvkit_status nvkit_estimate_density(double c_ensemble, double c_single, const nvkit_psf* psf,
                                    nvkit_density_method method, nvkit_density* out) {
  return guard([&] {
    need(out, "out");
    confocal::PsfModel p;
    if (psf != nullptr) p = {psf->w_x, psf->w_y, psf->w_z};
    require(method == NVKIT_DENSITY_GAUSSIAN || method == NVKIT_DENSITY_UNIFORM,
            "unknown density method");
    const auto e = confocal::estimate_density(
        c_ensemble, c_single, p,
        method == NVKIT_DENSITY_GAUSSIAN ? confocal::DensityMethod::Gaussian
                                         : confocal::DensityMethod::Uniform);
    *out = {e.number_density, e.ppb, e.effective_volume, p.is_default() ? 1 : 0};
  });
}

nvkit_status nvkit_enhancement_ratio(double region_a, double region_b, double* out) {
  return guard([&] {
    need(out, "out");
    *out = confocal::enhancement_ratio(region_a, region_b);
  });
}

nvkit_status nvkit_density_to_ppb(double per_um3, double* out) {
  return guard([&] {
    need(out, "out");
    *out = confocal::density_to_ppb(per_um3);
  });
}

nvkit_status nvkit_ppb_to_density(double ppb, double* out) {
  return guard([&] {
    need(out, "out");
    *out = confocal::ppb_to_density(ppb);
  });
}

// ---- magnetometry

nvkit_status nvkit_sensitivity(const nvkit_sensor* sensor, nvkit_sensitivity_report* out) {
  return guard([&] {
    need(sensor, "sensor");
    need(out, "out");
    const magnetometry::SensorParams p{sensor->count_rate, sensor->contrast,
                                       sensor->readout_window, sensor->t2_star, sensor->t2,
                                       sensor->time_unit_s};
    const auto r = magnetometry::sensitivity(p);
    *out = {r.eta_dc, r.eta_ac, r.hbar, r.lande_g, r.bohr_magneton, r.notes.empty() ? 0 : 1};
  });
}

}  // extern "C"
