// nvkit command-line driver. Every subcommand goes through the C API.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"
#include "nvkit/nvkit.h"
#include "record.hpp"

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ComputeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(nvkit_status s) {
  if (s != NVKIT_OK) {
    std::string msg = nvkit_last_error();
    if (msg.empty()) msg = nvkit_status_name(s);
    throw ComputeError(msg);
  }
}

template <class T, void (*Destroy)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Destroy(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using SpinHandle = Handle<nvkit_spin_system, nvkit_spin_system_destroy>;
using CurveHandle = Handle<nvkit_curve, nvkit_curve_destroy>;
using FitHandle = Handle<nvkit_odmr_fit, nvkit_odmr_fit_destroy>;
using SeqHandle = Handle<nvkit_sequence, nvkit_sequence_destroy>;
using MapHandle = Handle<nvkit_plmap, nvkit_plmap_destroy>;

std::vector<double> parse_list(const std::string& flag, const std::string& text,
                               std::size_t expected = 0) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError("--" + flag + ": '" + tok + "' is not a number");
    }
  }
  if (expected != 0 && out.size() != expected)
    throw UsageError("--" + flag + ": expected " + std::to_string(expected) +
                     " comma-separated values");
  return out;
}

std::vector<double> grid(const std::string& what, double start, double stop, double step) {
  if (!(step > 0.0) || !(stop > start))
    throw UsageError(what + ": need stop > start and step > 0");
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  if (n > 2000000) throw UsageError(what + ": grid too large");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = start + step * static_cast<double>(i);
  return g;
}

struct CurveData {
  std::vector<double> x, y, sigma;
};

CurveData read_curve(const nvkit_curve* c) {
  std::size_t n = 0;
  check(nvkit_curve_size(c, &n));
  CurveData d{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
  check(nvkit_curve_data(c, d.x.data(), d.y.data(), d.sigma.data(), n));
  return d;
}

// ---- shared option groups

struct Common {
  std::string format = "table";
  std::string plot_out;
  std::uint64_t seed = 1;
  std::string config;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--format", c.format, "Output format: table or kv")
      ->check(CLI::IsMember({"table", "kv"}))
      ->capture_default_str();
  sub->add_option("--plot-out", c.plot_out, "Write a two-column plot file");
  sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  sub->add_option("--config", c.config, "Configuration file (default: $NVKIT_CONFIG)");
}

struct SpinFlags {
  double zfs = 2870.0;
  std::string b = "0,0,0";
  double b_axial = 0.0;
  double xi = 0.0;
  double delta = 0.0;
  std::string nuclei = "none";
  double n14_apar = -2.16, n14_aperp = -2.7;
  double c13_apar = 6.43, c13_aperp = 0.0;
  int orientation = 0;
};

void add_spin(CLI::App* sub, SpinFlags& f) {
  sub->add_option("--zfs", f.zfs, "Zero-field splitting D (MHz)")->capture_default_str();
  sub->add_option("--b", f.b, "Lab-frame field bx,by,bz (mT)")->capture_default_str();
  sub->add_option("--b-axial", f.b_axial, "Extra field along the NV axis (mT)")->capture_default_str();
  sub->add_option("--xi", f.xi, "Effective shift xi (MHz)")->capture_default_str();
  sub->add_option("--delta", f.delta, "Effective splitting Delta (MHz)")->capture_default_str();
  sub->add_option("--nuclei", f.nuclei, "Comma list of n14, c13, or none")->capture_default_str();
  sub->add_option("--n14-apar", f.n14_apar, "14N axial hyperfine (MHz)")->capture_default_str();
  sub->add_option("--n14-aperp", f.n14_aperp, "14N transverse hyperfine (MHz)")->capture_default_str();
  sub->add_option("--c13-apar", f.c13_apar, "13C axial hyperfine (MHz)")->capture_default_str();
  sub->add_option("--c13-aperp", f.c13_aperp, "13C transverse hyperfine (MHz)")->capture_default_str();
  sub->add_option("--orientation", f.orientation, "NV axis index 0..3")
      ->check(CLI::Range(0, 3))
      ->capture_default_str();
}

const double kAxes[4][3] = {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};

nvkit_environment make_env(const SpinFlags& f, int orientation) {
  const auto b = parse_list("b", f.b, 3);
  nvkit_environment env{};
  const double* a = kAxes[orientation];
  const double s = f.b_axial / std::sqrt(3.0);
  for (int i = 0; i < 3; ++i) env.b_lab[i] = b[static_cast<std::size_t>(i)] + s * a[i];
  env.xi = f.xi;
  env.delta = f.delta;
  return env;
}

void build_system(const SpinFlags& f, SpinHandle& sys) {
  check(nvkit_spin_system_create(sys.out()));
  check(nvkit_spin_system_set_zfs(sys.get(), f.zfs));
  check(nvkit_spin_system_set_orientation(sys.get(), f.orientation));
  if (f.nuclei == "none" || f.nuclei.empty()) return;
  std::stringstream in(f.nuclei);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok == "n14")
      check(nvkit_spin_system_add_nucleus(sys.get(), NVKIT_N14, f.n14_apar, f.n14_aperp));
    else if (tok == "c13")
      check(nvkit_spin_system_add_nucleus(sys.get(), NVKIT_C13, f.c13_apar, f.c13_aperp));
    else
      throw UsageError("--nuclei: unknown species '" + tok + "' (use n14, c13 or none)");
  }
}

struct CoherenceFlags {
  nvkit_coherence c{};
  CoherenceFlags() { nvkit_coherence_default(&c); }
};

void add_coherence(CLI::App* sub, CoherenceFlags& f) {
  sub->add_option("--t1-ms", f.c.t1_ms, "T1 (ms)")->capture_default_str();
  sub->add_option("--t2-us", f.c.t2_us, "Hahn-echo T2 (us)")->capture_default_str();
  sub->add_option("--t2star-us", f.c.t2_star_us, "T2* (us)")->capture_default_str();
  sub->add_option("--trho-us", f.c.t_rho_rabi_us, "Driven decay time T_rho (us)")->capture_default_str();
  sub->add_option("--n-stretch", f.c.n_stretch, "Stretch exponent of the envelopes")->capture_default_str();
}

// ---- subcommands

struct OdmrSim {
  Common common;
  SpinFlags spin;
  std::string mode = "cw";
  double fwhm = 0.0;
  double contrast = 0.1;
  double lower_weight = 1.0;
  bool ensemble = false;
  double f_start = NAN, f_stop = NAN, f_step = 0.0;
  std::string noise = "none";
  double noise_sigma = 0.0;
  double counts = 0.0;
  std::string out;
};

void run_odmr_sim(OdmrSim& o, nvcli::Record& rec) {
  SpinHandle sys;
  build_system(o.spin, sys);
  nvkit_odmr_options opt;
  nvkit_odmr_options_default(&opt);
  opt.pulsed = o.mode == "pulsed";
  opt.fwhm = o.fwhm;
  opt.contrast = o.contrast;
  opt.lower_branch_weight = o.lower_weight;
  opt.ensemble = o.ensemble;
  opt.noise = o.noise == "gaussian" ? NVKIT_NOISE_GAUSSIAN
              : o.noise == "poisson" ? NVKIT_NOISE_POISSON
                                     : NVKIT_NOISE_NONE;
  opt.noise_sigma = o.noise_sigma;
  opt.counts_per_point = o.counts;
  opt.seed = o.common.seed;

  // Lines per orientation; the ensemble uses all four with weight 1/4.
  std::vector<nvkit_transition> lines;
  std::vector<int> orientations;
  if (o.ensemble)
    orientations = {0, 1, 2, 3};
  else
    orientations = {o.spin.orientation};
  for (int k : orientations) {
    SpinFlags f = o.spin;
    f.orientation = k;
    SpinHandle s;
    build_system(f, s);
    const nvkit_environment env = make_env(o.spin, o.spin.orientation);
    std::size_t n = 0;
    check(nvkit_transitions(s.get(), &env, nullptr, 0, &n));
    std::vector<nvkit_transition> t(n);
    check(nvkit_transitions(s.get(), &env, t.data(), n, &n));
    for (auto& l : t) {
      l.strength /= static_cast<double>(orientations.size());
      lines.push_back(l);
    }
  }
  std::sort(lines.begin(), lines.end(), [](const nvkit_transition& a, const nvkit_transition& b) {
    return a.frequency < b.frequency || (a.frequency == b.frequency && a.strength < b.strength);
  });
  if (lines.empty()) throw ComputeError("no allowed transitions");

  const double width = o.fwhm > 0.0 ? o.fwhm : (opt.pulsed ? 0.7 : 8.0);
  const double lo = std::isnan(o.f_start) ? lines.front().frequency - 6.0 * width : o.f_start;
  const double hi = std::isnan(o.f_stop) ? lines.back().frequency + 6.0 * width : o.f_stop;
  const double step = o.f_step > 0.0 ? o.f_step : width / 20.0;
  const auto g = grid("frequency grid", lo, hi, step);

  const nvkit_environment env = make_env(o.spin, o.spin.orientation);
  CurveHandle spec;
  check(nvkit_odmr_synthesize(sys.get(), &env, &opt, g.data(), g.size(), spec.out()));
  if (!o.out.empty()) check(nvkit_curve_save(spec.get(), o.out.c_str()));
  const CurveData d = read_curve(spec.get());
  if (!o.common.plot_out.empty()) nvcli::write_plot(o.common.plot_out, "freq_MHz", "signal", d.x, d.y);

  rec.text("mode", o.mode);
  rec.integer("ensemble", o.ensemble ? 1 : 0);
  rec.integer("n_points", static_cast<long long>(g.size()));
  rec.number("f_start", g.front(), "MHz");
  rec.number("f_stop", g.back(), "MHz");
  rec.number("fwhm", width, "MHz");
  rec.integer("n_lines", static_cast<long long>(lines.size()));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    rec.number("line." + std::to_string(i) + ".center", lines[i].frequency, "MHz");
    rec.number("line." + std::to_string(i) + ".strength", lines[i].strength);
  }
  rec.number("signal_min", *std::min_element(d.y.begin(), d.y.end()));
  if (!o.out.empty()) rec.text("output", o.out);
}

struct OdmrFit {
  Common common;
  std::string in;
  int n_dips = 2;
  double d_ref = 2870.0;
  std::string mode = "auto";
};

void run_odmr_fit(OdmrFit& o, nvcli::Record& rec) {
  CurveHandle spec;
  check(nvkit_curve_load(o.in.c_str(), NVKIT_CURVE_ODMR_CW, spec.out()));
  FitHandle fit;
  check(nvkit_odmr_fit_run(spec.get(), o.n_dips, nullptr, 0.0, o.d_ref, fit.out()));
  nvkit_odmr_summary s{};
  check(nvkit_odmr_fit_summary(fit.get(), &s));
  rec.integer("n_dips", static_cast<long long>(s.n_dips));
  rec.number("baseline", s.baseline);
  for (std::size_t i = 0; i < s.n_dips; ++i) {
    nvkit_dip dip{};
    check(nvkit_odmr_fit_dip(fit.get(), i, &dip));
    const std::string k = "dip." + std::to_string(i);
    rec.number(k + ".center", dip.center, "MHz");
    rec.number(k + ".center_err", dip.center_error, "MHz");
    rec.number(k + ".contrast", dip.contrast);
    rec.number(k + ".fwhm", dip.fwhm, "MHz");
  }
  rec.number("v_minus", s.v_minus, "MHz");
  rec.number("v_plus", s.v_plus, "MHz");
  rec.number("d_ref", s.d_fit, "MHz");
  rec.number("xi", s.xi_fit, "MHz");
  rec.number("delta", s.delta_fit, "MHz");
  rec.number("delta_half_separation", s.delta_half_separation, "MHz");
  rec.number("residual_norm", s.residual_norm);
  rec.integer("converged", s.converged);
  rec.integer("iterations", s.iterations);
  rec.note("delta follows v = D + xi +- 2 Delta; delta_half_separation is (v+ - v-)/2");
  if (!o.common.plot_out.empty()) {
    const CurveData d = read_curve(spec.get());
    std::vector<double> model(d.x.size());
    for (std::size_t i = 0; i < d.x.size(); ++i) check(nvkit_odmr_fit_evaluate(fit.get(), d.x[i], &model[i]));
    nvcli::write_plot(o.common.plot_out, "freq_MHz", "fit", d.x, model);
  }
}

struct SeqSim {
  Common common;
  SpinFlags spin;
  CoherenceFlags coh;
  std::string sequence;
  std::string curve;
  double t_start = 0.0, t_stop = 5.0, t_step = 0.01;
  double mw_freq = NAN;
  double rabi_freq = 1.0;
  double detuning = 0.0;
  std::string branch = "lower";
  double larmor = NAN;
  double modulation = -1.0;
  double amplitude = 1.0;
  double baseline = 0.0;
  std::string polarization = "linear";
  bool no_decoherence = false;
  double readout_contrast = 0.2;
  double noise_sigma = 0.0;
  std::string out;
};

void add_sequence_elements(const std::string& text, nvkit_sequence* seq) {
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ';')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    const std::string kind = item.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : item.substr(colon + 1);
    if (kind == "laser") {
      check(nvkit_sequence_add_laser(seq, parse_list("sequence", args, 1)[0]));
    } else if (kind == "wait") {
      check(nvkit_sequence_add_wait(seq, parse_list("sequence", args, 1)[0]));
    } else if (kind == "readout") {
      check(nvkit_sequence_add_readout(seq, parse_list("sequence", args, 1)[0]));
    } else if (kind == "pulse") {
      const auto v = parse_list("sequence", args, 4);
      check(nvkit_sequence_add_pulse(seq, v[0], v[1], v[2], v[3]));
    } else {
      throw UsageError("--sequence: unknown element '" + kind +
                       "' (laser:t, pulse:f,rabi,phase,t, wait:t, readout:t)");
    }
  }
}

void run_seq_sim(SeqSim& o, nvcli::Record& rec) {
  if (o.sequence.empty() == o.curve.empty())
    throw UsageError("seq-sim: give exactly one of --sequence or --curve");
  SpinHandle sys;
  build_system(o.spin, sys);
  const nvkit_environment env = make_env(o.spin, o.spin.orientation);
  nvkit_propagation_options prop;
  nvkit_propagation_options_default(&prop);
  prop.polarization = o.polarization == "sigma+"   ? NVKIT_POL_SIGMA_PLUS
                      : o.polarization == "sigma-" ? NVKIT_POL_SIGMA_MINUS
                                                   : NVKIT_POL_LINEAR;
  prop.decoherence = o.no_decoherence ? 0 : 1;
  prop.readout_contrast = o.readout_contrast;

  if (!o.sequence.empty()) {
    SeqHandle seq;
    check(nvkit_sequence_create(seq.out()));
    add_sequence_elements(o.sequence, seq.get());
    std::size_t n = 0;
    check(nvkit_sequence_length(seq.get(), &n));
    std::vector<double> traj(n);
    nvkit_propagation_result r{};
    check(nvkit_sequence_propagate(sys.get(), &env, seq.get(), &o.coh.c, &prop, &r, traj.data(),
                                   traj.size(), &n));
    rec.integer("n_elements", static_cast<long long>(n));
    rec.number("ms0_population", r.ms0_population);
    rec.number("signal", r.signal);
    rec.number("trace", r.trace);
    rec.number("purity", r.purity);
    for (std::size_t i = 0; i < n; ++i) rec.number("trajectory." + std::to_string(i), traj[i]);
    if (!o.common.plot_out.empty()) {
      std::vector<double> idx(n);
      for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<double>(i);
      nvcli::write_plot(o.common.plot_out, "element", "ms0_population", idx, traj);
    }
    return;
  }

  const auto t = grid("time grid", o.t_start, o.t_stop, o.t_step);
  CurveHandle c;
  if (o.curve == "rabi") {
    double f = o.mw_freq;
    if (std::isnan(f)) {
      nvkit_transition first{};
      std::size_t n = 0;
      check(nvkit_transitions(sys.get(), &env, nullptr, 0, &n));
      std::vector<nvkit_transition> lines(n);
      check(nvkit_transitions(sys.get(), &env, lines.data(), n, &n));
      if (lines.empty()) throw ComputeError("no allowed transitions");
      first = lines.front();
      f = first.frequency;
    }
    check(nvkit_rabi_trace(sys.get(), &env, f, o.rabi_freq, t.data(), t.size(), &o.coh.c, &prop,
                           c.out()));
    rec.number("mw_freq", f, "MHz");
    rec.number("rabi_freq", o.rabi_freq, "MHz");
  } else if (o.curve == "fid") {
    check(nvkit_simulate_fid(sys.get(), &env, &o.coh.c, o.detuning, t.data(), t.size(), o.amplitude,
                             o.baseline, o.branch == "upper" ? NVKIT_BRANCH_UPPER : NVKIT_BRANCH_LOWER,
                             c.out()));
    rec.number("detuning", o.detuning, "MHz");
    rec.text("branch", o.branch);
  } else if (o.curve == "hahn") {
    double fl = o.larmor;
    if (std::isnan(fl)) {
      const double b = std::sqrt(env.b_lab[0] * env.b_lab[0] + env.b_lab[1] * env.b_lab[1] +
                                 env.b_lab[2] * env.b_lab[2]);
      check(nvkit_larmor_13c(b, &fl));
    }
    check(nvkit_simulate_hahn(&o.coh.c, fl, t.data(), t.size(), o.amplitude, o.baseline,
                              o.modulation, c.out()));
    rec.number("larmor_freq", fl, "MHz");
  } else {
    check(nvkit_simulate_t1(&o.coh.c, t.data(), t.size(), o.amplitude, o.baseline, c.out()));
  }
  if (o.noise_sigma > 0.0) check(nvkit_curve_add_noise(c.get(), o.noise_sigma, o.common.seed));
  if (!o.out.empty()) check(nvkit_curve_save(c.get(), o.out.c_str()));
  const CurveData d = read_curve(c.get());
  rec.text("curve", o.curve);
  rec.integer("n_points", static_cast<long long>(d.x.size()));
  rec.number("signal_first", d.y.front());
  rec.number("signal_last", d.y.back());
  rec.number("signal_min", *std::min_element(d.y.begin(), d.y.end()));
  rec.number("signal_max", *std::max_element(d.y.begin(), d.y.end()));
  if (o.curve == "rabi" && d.x.size() >= 16) {
    double depth = 0.0;
    check(nvkit_modulation_depth(c.get(), &depth));
    rec.number("beat_modulation_depth", depth);
  }
  if (!o.out.empty()) rec.text("output", o.out);
  if (!o.common.plot_out.empty()) nvcli::write_plot(o.common.plot_out, "time_us", "signal", d.x, d.y);
}

struct DecayFit {
  Common common;
  std::string in;
  std::string model = "stretched";
  nvkit_envelope_options opts{};
  DecayFit() { nvkit_envelope_options_default(&opts); }
};

void run_decay_fit(DecayFit& o, nvcli::Record& rec) {
  CurveHandle c;
  check(nvkit_curve_load(o.in.c_str(), NVKIT_CURVE_FID, c.out()));
  const nvkit_envelope_model m = o.model == "single"  ? NVKIT_ENVELOPE_SINGLE_EXP
                                 : o.model == "osc"   ? NVKIT_ENVELOPE_STRETCHED_TIMES_OSC
                                                      : NVKIT_ENVELOPE_STRETCHED;
  nvkit_envelope_result r{};
  std::vector<nvkit_oscillation> osc(16);
  std::size_t n_osc = 0;
  check(nvkit_decay_fit(c.get(), m, &o.opts, &r, osc.data(), osc.size(), &n_osc));
  rec.text("model", o.model);
  rec.number("t_coh", r.t_coh, "us");
  rec.number("t_coh_err", r.t_coh_error, "us");
  rec.number("n_stretch", r.n_stretch);
  rec.number("n_stretch_err", r.n_stretch_error);
  rec.number("amplitude", r.amplitude);
  rec.number("baseline", r.baseline);
  for (std::size_t i = 0; i < n_osc; ++i) {
    rec.number("osc." + std::to_string(i) + ".frequency", osc[i].frequency, "MHz");
    rec.number("osc." + std::to_string(i) + ".amplitude", osc[i].amplitude);
  }
  rec.number("residual_norm", r.residual_norm);
  rec.integer("converged", r.converged);
  rec.integer("iterations", r.iterations);
  if (!o.common.plot_out.empty()) {
    const CurveData d = read_curve(c.get());
    std::vector<double> env(d.x.size());
    for (std::size_t i = 0; i < d.x.size(); ++i) {
      const double e = std::exp(-std::pow(d.x[i] / r.t_coh, m == NVKIT_ENVELOPE_SINGLE_EXP ? 1.0 : r.n_stretch));
      env[i] = r.baseline + (m == NVKIT_ENVELOPE_STRETCHED_TIMES_OSC ? r.amplitude : r.amplitude) * e;
    }
    nvcli::write_plot(o.common.plot_out, "time_us", "envelope", d.x, env);
  }
}

struct FreqExtract {
  Common common;
  std::string in;
  int max_components = 3;
};

void run_freq_extract(FreqExtract& o, nvcli::Record& rec) {
  CurveHandle c;
  check(nvkit_curve_load(o.in.c_str(), NVKIT_CURVE_FID, c.out()));
  std::vector<nvkit_oscillation> osc(static_cast<std::size_t>(std::max(o.max_components, 1)));
  std::size_t n = 0;
  check(nvkit_extract_frequencies(c.get(), o.max_components, osc.data(), osc.size(), &n));
  rec.integer("n_components", static_cast<long long>(n));
  std::vector<double> f, a;
  for (std::size_t i = 0; i < n; ++i) {
    rec.number("component." + std::to_string(i) + ".frequency", osc[i].frequency, "MHz");
    rec.number("component." + std::to_string(i) + ".amplitude", osc[i].amplitude);
    f.push_back(osc[i].frequency);
    a.push_back(osc[i].amplitude);
  }
  if (!o.common.plot_out.empty()) nvcli::write_plot(o.common.plot_out, "freq_MHz", "amplitude", f, a);
}

struct G2Fit {
  Common common;
  std::string in;
  bool synthetic = false;
  double noise_sigma = 0.02;
  std::string out;
};

nvkit_g2_params reference_g2() { return {0.275, 1.481, 9.48, 0.365, 114.0, 0.313, 312.0}; }

void run_g2_fit(G2Fit& o, nvcli::Record& rec) {
  if (o.in.empty() == !o.synthetic) throw UsageError("g2-fit: give exactly one of --in or --synthetic");
  CurveHandle c;
  if (o.synthetic) {
    // Fine steps near zero delay, coarser in the wings.
    std::vector<double> taus;
    for (int i = -15000; i <= 15000; ++i) {
      const double t = 0.1 * i;
      if (std::abs(t) < 30.0) continue;
      taus.push_back(t);
    }
    for (int i = -2999; i <= 2999; ++i) taus.push_back(0.01 * i);
    std::sort(taus.begin(), taus.end());
    const nvkit_g2_params ref = reference_g2();
    check(nvkit_g2_synthesize(&ref, taus.data(), taus.size(), o.noise_sigma, o.common.seed, c.out()));
    if (!o.out.empty()) check(nvkit_curve_save(c.get(), o.out.c_str()));
  } else {
    check(nvkit_curve_load(o.in.c_str(), NVKIT_CURVE_G2, c.out()));
  }
  nvkit_g2_fit_result r{};
  check(nvkit_g2_fit(c.get(), nullptr, &r));
  auto put = [&](const char* k, double v, double e, const char* unit) {
    rec.number(k, v, unit);
    rec.number(std::string(k) + "_err", e, unit);
  };
  put("tau0", r.params.tau0, r.errors.tau0, "ns");
  put("c1", r.params.c1, r.errors.c1, "");
  put("tau1", r.params.tau1, r.errors.tau1, "ns");
  put("c2", r.params.c2, r.errors.c2, "");
  put("tau2", r.params.tau2, r.errors.tau2, "ns");
  put("c3", r.params.c3, r.errors.c3, "");
  put("tau3", r.params.tau3, r.errors.tau3, "ns");
  rec.number("g2_model_at_tau0", r.g2_at_tau0);
  rec.number("residual_norm", r.residual_norm);
  rec.integer("converged", r.converged);
  rec.integer("iterations", r.iterations);
  rec.note("g2_model_at_tau0 is the fitted model value at tau0, not a background-corrected measurement");
  if (!o.common.plot_out.empty()) {
    const CurveData d = read_curve(c.get());
    std::vector<double> m(d.x.size());
    for (std::size_t i = 0; i < d.x.size(); ++i) check(nvkit_g2_model(d.x[i], &r.params, &m[i]));
    nvcli::write_plot(o.common.plot_out, "tau_ns", "g2_fit", d.x, m);
  }
}

struct SatFit {
  Common common;
  std::string in;
  double p_sat = 1.10;
  double cal_power = NAN;
  double cal_rate = NAN;
};

void run_sat_fit(SatFit& o, nvcli::Record& rec) {
  nvkit_saturation s{};
  if (!o.in.empty()) {
    CurveHandle c;
    check(nvkit_curve_load(o.in.c_str(), NVKIT_CURVE_SATURATION, c.out()));
    check(nvkit_saturation_fit(c.get(), &s));
    rec.text("source", "fit");
  } else {
    if (std::isnan(o.cal_power) || std::isnan(o.cal_rate))
      throw UsageError("sat-fit: give --in, or --cal-power and --cal-rate");
    check(nvkit_saturation_calibrate(o.cal_power, o.cal_rate, o.p_sat, &s));
    rec.text("source", "calibration");
  }
  rec.number("c_sat", s.c_sat, "counts/s");
  rec.number("p_sat", s.p_sat, "mW");
  rec.number("k_linear", s.k_linear, "counts/s/mW");
  rec.number("c_sat_err", s.c_sat_error, "counts/s");
  rec.number("p_sat_err", s.p_sat_error, "mW");
  rec.integer("converged", s.converged);
  if (!o.common.plot_out.empty()) {
    std::vector<double> p, c;
    for (int i = 0; i <= 100; ++i) {
      p.push_back(0.05 * s.p_sat * i);
      double v = 0.0;
      check(nvkit_saturation_model(p.back(), &s, &v));
      c.push_back(v);
    }
    nvcli::write_plot(o.common.plot_out, "power_mW", "counts_per_s", p, c);
  }
}

struct Density {
  Common common;
  double c_ens = NAN;
  double c_single = NAN;
  std::string psf = "0.45,0.45,2.0";
  std::string method = "both";
  double power = NAN;
  double p_sat = 1.10;
};

void run_density(Density& o, nvcli::Record& rec) {
  if (std::isnan(o.c_ens) || std::isnan(o.c_single))
    throw UsageError("density: --c-ens and --c-single are required");
  const auto w = parse_list("psf", o.psf, 3);
  const nvkit_psf psf{w[0], w[1], w[2]};
  rec.number("psf_wx", psf.w_x, "um");
  rec.number("psf_wy", psf.w_y, "um");
  rec.number("psf_wz", psf.w_z, "um");
  nvkit_density g{}, u{};
  if (o.method != "uniform") {
    check(nvkit_estimate_density(o.c_ens, o.c_single, &psf, NVKIT_DENSITY_GAUSSIAN, &g));
    rec.number("gaussian.density", g.number_density, "1/um^3");
    rec.number("gaussian.ppb", g.ppb, "ppb");
    rec.number("gaussian.volume", g.effective_volume, "um^3");
  }
  if (o.method != "gaussian") {
    check(nvkit_estimate_density(o.c_ens, o.c_single, &psf, NVKIT_DENSITY_UNIFORM, &u));
    rec.number("uniform.density", u.number_density, "1/um^3");
    rec.number("uniform.ppb", u.ppb, "ppb");
    rec.number("uniform.volume", u.effective_volume, "um^3");
  }
  if (o.method == "both") rec.number("gaussian_over_uniform", g.ppb / u.ppb);
  const bool assumed = (o.method != "uniform" ? g.default_psf : u.default_psf) != 0;
  rec.integer("psf_assumed_default", assumed ? 1 : 0);
  if (assumed)
    rec.note("PSF widths are the built-in assumed default (0.45, 0.45, 2.0) um, not measured values");
  if (!std::isnan(o.power) && o.power > o.p_sat / 3.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "excitation power %g mW exceeds P_sat/3 = %g mW; count rates are no longer linear in power",
                  o.power, o.p_sat / 3.0);
    const std::string msg = buf;
    std::cerr << "warning: " << msg << "\n";
    rec.note(msg);
  }
}

struct Enhance {
  Common common;
  double a = NAN;
  double b = NAN;
};

void run_enhance(Enhance& o, nvcli::Record& rec) {
  if (std::isnan(o.a) || std::isnan(o.b)) throw UsageError("enhance: --a and --b are required");
  double r = 0.0;
  check(nvkit_enhancement_ratio(o.a, o.b, &r));
  rec.number("ratio", r);
}

struct Sensitivity {
  Common common;
  std::string preset;
  double count_rate = NAN;
  double contrast = NAN;
  double readout_us = NAN;
  double t2star_us = NAN;
  double t2_us = NAN;
};

void run_sensitivity(Sensitivity& o, nvcli::Record& rec) {
  nvkit_sensor s{NAN, NAN, NAN, NAN, NAN, 1e-6};
  if (o.preset == "single")
    s = {30e3, 0.20, 0.5, 1.76, 494.0, 1e-6};
  else if (o.preset == "ensemble")
    s = {0.9e9, 0.033, 0.5, 0.1, 1.53, 1e-6};
  if (!std::isnan(o.count_rate)) s.count_rate = o.count_rate;
  if (!std::isnan(o.contrast)) s.contrast = o.contrast;
  if (!std::isnan(o.readout_us)) s.readout_window = o.readout_us;
  if (!std::isnan(o.t2star_us)) s.t2_star = o.t2star_us;
  if (!std::isnan(o.t2_us)) s.t2 = o.t2_us;
  if (std::isnan(s.count_rate) || std::isnan(s.contrast) || std::isnan(s.readout_window) ||
      std::isnan(s.t2_star) || std::isnan(s.t2))
    throw UsageError(
        "sensitivity: give --preset or all of --count-rate, --contrast, --readout-us, "
        "--t2star-us, --t2-us");
  nvkit_sensitivity_report r{};
  check(nvkit_sensitivity(&s, &r));
  rec.number("eta_dc", r.eta_dc, "nT/√Hz");
  rec.number("eta_ac", r.eta_ac, "nT/√Hz");
  rec.number("hbar", r.hbar, "J*s");
  rec.number("lande_g", r.lande_g);
  rec.number("bohr_magneton", r.bohr_magneton, "J/T");
  if (r.t2_inconsistency_flag)
    rec.note("T2 = 1.53 us reproduces the published ensemble eta_ac; the measured ensemble T2 is 1.63 us");
}

struct MapSlice {
  Common common;
  std::string in;
  std::string axis = "x";
  std::string at;
};

void run_map_slice(MapSlice& o, nvcli::Record& rec) {
  MapHandle map;
  check(nvkit_plmap_load(o.in.c_str(), map.out()));
  int dims = 0;
  check(nvkit_plmap_dims(map.get(), &dims));
  const int axis = o.axis == "x" ? 0 : o.axis == "y" ? 1 : 2;
  if (axis >= dims) throw UsageError("--axis: map has only " + std::to_string(dims) + " axes");
  std::vector<std::size_t> lengths(static_cast<std::size_t>(dims));
  for (int d = 0; d < dims; ++d) check(nvkit_plmap_axis(map.get(), d, nullptr, 0, &lengths[static_cast<std::size_t>(d)]));
  std::vector<std::size_t> at(static_cast<std::size_t>(dims), 0);
  if (o.at.empty()) {
    // Through the brightest pixel.
    std::size_t n = 0;
    check(nvkit_plmap_counts(map.get(), nullptr, 0, &n));
    std::vector<double> counts(n);
    check(nvkit_plmap_counts(map.get(), counts.data(), n, &n));
    std::size_t flat = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    for (int d = dims - 1; d >= 0; --d) {
      at[static_cast<std::size_t>(d)] = flat % lengths[static_cast<std::size_t>(d)];
      flat /= lengths[static_cast<std::size_t>(d)];
    }
  } else {
    const auto v = parse_list("at", o.at, static_cast<std::size_t>(dims));
    for (int d = 0; d < dims; ++d) {
      const double x = v[static_cast<std::size_t>(d)];
      if (x < 0 || x != std::floor(x) || x >= static_cast<double>(lengths[static_cast<std::size_t>(d)]))
        throw UsageError("--at: index " + std::to_string(d) + " out of range");
      at[static_cast<std::size_t>(d)] = static_cast<std::size_t>(x);
    }
  }
  nvkit_slice_fit f{};
  check(nvkit_plmap_fit_slice(map.get(), axis, at.data(), &f));
  rec.text("axis", o.axis);
  for (int d = 0; d < dims; ++d)
    if (d != axis) rec.integer(std::string("at.") + "xyz"[d], static_cast<long long>(at[static_cast<std::size_t>(d)]));
  rec.number("amplitude", f.amplitude, "counts/s");
  rec.number("center", f.center, "um");
  rec.number("fwhm", f.fwhm, "um");
  rec.number("fwhm_err", f.fwhm_error, "um");
  rec.number("baseline", f.baseline, "counts/s");
  rec.number("residual_norm", f.residual_norm, "counts/s");
  rec.integer("converged", f.converged);
  if (!o.common.plot_out.empty()) {
    std::vector<double> x(lengths[static_cast<std::size_t>(axis)]);
    std::size_t n = 0;
    check(nvkit_plmap_axis(map.get(), axis, x.data(), x.size(), &n));
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = (x[i] - f.center) / f.fwhm;
      y[i] = f.baseline + f.amplitude * std::exp(-4.0 * std::log(2.0) * d * d);
    }
    nvcli::write_plot(o.common.plot_out, "position_um", "fit_counts", x, y);
  }
}

// ---- configuration

std::string find_config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  if (const char* env = std::getenv("NVKIT_CONFIG"); env != nullptr && *env != '\0') return env;
  return "";
}

// Validates every section against the subcommands and returns the flags
// for the selected one, to be placed before the user's own arguments.
std::vector<std::string> config_args(const CLI::App& app, const std::string& path,
                                     const std::string& selected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("--config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  nvcli::ConfigFile cfg;
  try {
    cfg = nvcli::parse_config(buf.str(), path);
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
  std::vector<std::string> out;
  for (const auto& [section, entries] : cfg) {
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands({})) {
      if (s->get_name() == section) sub = s;
    }
    if (sub == nullptr) throw UsageError(path + ": unknown section [" + section + "]");
    for (const auto& e : entries) {
      const CLI::Option* opt = nullptr;
      for (const auto* o : sub->get_options()) {
        for (const auto& l : o->get_lnames())
          if (l == e.key) opt = o;
      }
      if (opt == nullptr || e.key == "config" || e.key == "help")
        throw UsageError(path + ":" + std::to_string(e.line) + ": unknown key '" + e.key +
                         "' in [" + section + "]");
      if (section != selected) continue;
      if (opt->get_type_size() == 0) {
        if (e.value == "true" || e.value == "1" || e.value == "yes") out.push_back("--" + e.key);
        else if (!(e.value == "false" || e.value == "0" || e.value == "no"))
          throw UsageError(path + ":" + std::to_string(e.line) + ": '" + e.key +
                           "' expects true or false");
      } else {
        out.push_back("--" + e.key + "=" + e.value);
      }
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nvkit: NV-center spin simulation and analysis"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_version_flag("--version", nvkit_version());

  OdmrSim odmr_sim;
  auto* s_odmr = app.add_subcommand("odmr-sim", "Synthesize an ODMR spectrum");
  add_common(s_odmr, odmr_sim.common);
  add_spin(s_odmr, odmr_sim.spin);
  s_odmr->add_option("--mode", odmr_sim.mode, "cw or pulsed")->check(CLI::IsMember({"cw", "pulsed"}))->capture_default_str();
  s_odmr->add_option("--fwhm", odmr_sim.fwhm, "Lorentzian FWHM (MHz), 0 = mode preset")->capture_default_str();
  s_odmr->add_option("--contrast", odmr_sim.contrast, "Dip contrast per unit strength")->capture_default_str();
  s_odmr->add_option("--lower-weight", odmr_sim.lower_weight, "Contrast factor of the lower branch")->capture_default_str();
  s_odmr->add_flag("--ensemble", odmr_sim.ensemble, "Sum the four NV orientations");
  s_odmr->add_option("--f-start", odmr_sim.f_start, "Grid start (MHz)");
  s_odmr->add_option("--f-stop", odmr_sim.f_stop, "Grid stop (MHz)");
  s_odmr->add_option("--f-step", odmr_sim.f_step, "Grid step (MHz)");
  s_odmr->add_option("--noise", odmr_sim.noise, "none, gaussian or poisson")->check(CLI::IsMember({"none", "gaussian", "poisson"}))->capture_default_str();
  s_odmr->add_option("--noise-sigma", odmr_sim.noise_sigma, "Gaussian noise sigma")->capture_default_str();
  s_odmr->add_option("--counts", odmr_sim.counts, "Poisson counts per point at baseline")->capture_default_str();
  s_odmr->add_option("--out", odmr_sim.out, "Write the spectrum file");

  OdmrFit odmr_fit;
  auto* s_fit = app.add_subcommand("odmr-fit", "Fit Lorentzian dips to an ODMR spectrum");
  add_common(s_fit, odmr_fit.common);
  s_fit->add_option("--in", odmr_fit.in, "Spectrum file")->required();
  s_fit->add_option("--n-dips", odmr_fit.n_dips, "Number of dips")->check(CLI::PositiveNumber)->capture_default_str();
  s_fit->add_option("--d-ref", odmr_fit.d_ref, "Reference D for xi (MHz)")->capture_default_str();

  SeqSim seq;
  auto* s_seq = app.add_subcommand("seq-sim", "Simulate a pulse sequence or a coherence curve");
  add_common(s_seq, seq.common);
  add_spin(s_seq, seq.spin);
  add_coherence(s_seq, seq.coh);
  s_seq->add_option("--sequence", seq.sequence, "Elements: laser:t;pulse:f,rabi,phase,t;wait:t;readout:t");
  s_seq->add_option("--curve", seq.curve, "rabi, fid, hahn or t1")->check(CLI::IsMember({"rabi", "fid", "hahn", "t1"}));
  s_seq->add_option("--t-start", seq.t_start, "Time grid start (us)")->capture_default_str();
  s_seq->add_option("--t-stop", seq.t_stop, "Time grid stop (us)")->capture_default_str();
  s_seq->add_option("--t-step", seq.t_step, "Time grid step (us)")->capture_default_str();
  s_seq->add_option("--mw-freq", seq.mw_freq, "Rabi carrier (MHz), default lowest line");
  s_seq->add_option("--rabi-freq", seq.rabi_freq, "Rabi frequency (MHz)")->capture_default_str();
  s_seq->add_option("--detuning", seq.detuning, "FID detuning from the branch centroid (MHz)")->capture_default_str();
  s_seq->add_option("--branch", seq.branch, "FID branch: lower or upper")->check(CLI::IsMember({"lower", "upper"}))->capture_default_str();
  s_seq->add_option("--larmor-mhz", seq.larmor, "Bath Larmor frequency (MHz), default from |B|");
  s_seq->add_option("--modulation", seq.modulation, "Hahn bath modulation depth, <0 = default")->capture_default_str();
  s_seq->add_option("--amplitude", seq.amplitude, "Curve amplitude")->capture_default_str();
  s_seq->add_option("--baseline", seq.baseline, "Curve baseline")->capture_default_str();
  s_seq->add_option("--polarization", seq.polarization, "linear, sigma+ or sigma-")->check(CLI::IsMember({"linear", "sigma+", "sigma-"}))->capture_default_str();
  s_seq->add_flag("--no-decoherence", seq.no_decoherence, "Coherent evolution only");
  s_seq->add_option("--readout-contrast", seq.readout_contrast, "Readout contrast Lambda")->capture_default_str();
  s_seq->add_option("--noise-sigma", seq.noise_sigma, "Gaussian noise added to curves")->capture_default_str();
  s_seq->add_option("--out", seq.out, "Write the decay-curve file");

  DecayFit decay;
  auto* s_decay = app.add_subcommand("decay-fit", "Fit a coherence envelope to a decay curve");
  add_common(s_decay, decay.common);
  s_decay->add_option("--in", decay.in, "Decay-curve file")->required();
  s_decay->add_option("--model", decay.model, "stretched, single or osc")->check(CLI::IsMember({"stretched", "single", "osc"}))->capture_default_str();
  s_decay->add_option("--n-lower", decay.opts.n_lower, "Lower bound of n")->capture_default_str();
  s_decay->add_option("--n-upper", decay.opts.n_upper, "Upper bound of n")->capture_default_str();
  s_decay->add_option("--n-init", decay.opts.n_initial, "Start value of n")->capture_default_str();
  s_decay->add_option("--components", decay.opts.oscillation_components, "Oscillation components (osc)")->capture_default_str();

  FreqExtract freq;
  auto* s_freq = app.add_subcommand("freq-extract", "Extract oscillation frequencies from a time trace");
  add_common(s_freq, freq.common);
  s_freq->add_option("--in", freq.in, "Decay-curve file")->required();
  s_freq->add_option("--max", freq.max_components, "Maximum number of components")->check(CLI::PositiveNumber)->capture_default_str();

  G2Fit g2;
  auto* s_g2 = app.add_subcommand("g2-fit", "Fit the photon-correlation model");
  add_common(s_g2, g2.common);
  s_g2->add_option("--in", g2.in, "g2 file");
  s_g2->add_flag("--synthetic", g2.synthetic, "Fit a synthetic curve from the reference parameters");
  s_g2->add_option("--noise-sigma", g2.noise_sigma, "Noise of the synthetic curve")->capture_default_str();
  s_g2->add_option("--out", g2.out, "Write the synthetic curve");

  SatFit sat;
  auto* s_sat = app.add_subcommand("sat-fit", "Fit or calibrate the PL saturation curve");
  add_common(s_sat, sat.common);
  s_sat->add_option("--in", sat.in, "Saturation file (power_mW counts_per_s)");
  s_sat->add_option("--p-sat", sat.p_sat, "Saturation power for calibration (mW)")->capture_default_str();
  s_sat->add_option("--cal-power", sat.cal_power, "Calibration power (mW)");
  s_sat->add_option("--cal-rate", sat.cal_rate, "Calibration count rate (counts/s)");

  Density dens;
  auto* s_dens = app.add_subcommand("density", "Estimate NV density from count rates");
  add_common(s_dens, dens.common);
  s_dens->add_option("--c-ens", dens.c_ens, "Ensemble count rate (counts/s)");
  s_dens->add_option("--c-single", dens.c_single, "Single-emitter count rate (counts/s)");
  s_dens->add_option("--psf", dens.psf, "PSF FWHM wx,wy,wz (um)")->capture_default_str();
  s_dens->add_option("--method", dens.method, "gaussian, uniform or both")->check(CLI::IsMember({"gaussian", "uniform", "both"}))->capture_default_str();
  s_dens->add_option("--power-mw", dens.power, "Excitation power P0 (mW), enables the saturation warning");
  s_dens->add_option("--p-sat", dens.p_sat, "Saturation power (mW)")->capture_default_str();

  Enhance enh;
  auto* s_enh = app.add_subcommand("enhance", "Ratio of two count rates");
  add_common(s_enh, enh.common);
  s_enh->add_option("--a", enh.a, "Region A rate (counts/s)");
  s_enh->add_option("--b", enh.b, "Region B rate (counts/s)");

  Sensitivity sens;
  auto* s_sens = app.add_subcommand("sensitivity", "Shot-noise-limited field sensitivity");
  add_common(s_sens, sens.common);
  s_sens->add_option("--preset", sens.preset, "single or ensemble reference inputs")->check(CLI::IsMember({"single", "ensemble"}));
  s_sens->add_option("--count-rate", sens.count_rate, "PL rate C (counts/s)");
  s_sens->add_option("--contrast", sens.contrast, "ODMR contrast Lambda");
  s_sens->add_option("--readout-us", sens.readout_us, "Readout window t_L (us)");
  s_sens->add_option("--t2star-us", sens.t2star_us, "T2* (us)");
  s_sens->add_option("--t2-us", sens.t2_us, "T2 (us)");

  MapSlice slice;
  auto* s_map = app.add_subcommand("map-slice", "Fit a Gaussian to a line through a PL map");
  add_common(s_map, slice.common);
  s_map->add_option("--in", slice.in, "PL map file")->required();
  s_map->add_option("--axis", slice.axis, "x, y or z")->check(CLI::IsMember({"x", "y", "z"}))->capture_default_str();
  s_map->add_option("--at", slice.at, "Grid indices i,j[,k] of the line (default: brightest pixel)");

  std::vector<std::string> args;
  try {
    std::string selected;
    int sub_index = -1;
    for (int i = 1; i < argc && sub_index < 0; ++i) {
      for (const auto* s : app.get_subcommands({}))
        if (s->get_name() == argv[i]) {
          selected = argv[i];
          sub_index = i;
        }
    }
    std::vector<std::string> injected;
    const std::string cfg = find_config_path(argc, argv);
    if (!cfg.empty() && sub_index > 0) injected = config_args(app, cfg, selected);
    for (int i = 1; i < argc; ++i) {
      args.emplace_back(argv[i]);
      if (i == sub_index) args.insert(args.end(), injected.begin(), injected.end());
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  CLI::App* active = app.get_subcommands().front();
  nvcli::Record rec(active->get_name());
  const Common* common = nullptr;
  try {
    if (active == s_odmr) {
      common = &odmr_sim.common;
      run_odmr_sim(odmr_sim, rec);
    } else if (active == s_fit) {
      common = &odmr_fit.common;
      run_odmr_fit(odmr_fit, rec);
    } else if (active == s_seq) {
      common = &seq.common;
      run_seq_sim(seq, rec);
    } else if (active == s_decay) {
      common = &decay.common;
      run_decay_fit(decay, rec);
    } else if (active == s_freq) {
      common = &freq.common;
      run_freq_extract(freq, rec);
    } else if (active == s_g2) {
      common = &g2.common;
      run_g2_fit(g2, rec);
    } else if (active == s_sat) {
      common = &sat.common;
      run_sat_fit(sat, rec);
    } else if (active == s_dens) {
      common = &dens.common;
      run_density(dens, rec);
    } else if (active == s_enh) {
      common = &enh.common;
      run_enhance(enh, rec);
    } else if (active == s_sens) {
      common = &sens.common;
      run_sensitivity(sens, rec);
    } else {
      common = &slice.common;
      run_map_slice(slice, rec);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cout << rec.render(common->format == "kv" ? nvcli::Format::Kv : nvcli::Format::Table);
  return 0;
}
