#include "dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "error.hpp"
#include "lm.hpp"
#include "random.hpp"

namespace nvkit::dynamics {

using constants::kPi;

PulseSequence& PulseSequence::laser(double duration) {
  elements.emplace_back(LaserInit{duration});
  return *this;
}

PulseSequence& PulseSequence::pulse(double freq, double rabi_freq, double phase,
                                    double duration) {
  elements.emplace_back(MwPulse{freq, rabi_freq, phase, duration});
  return *this;
}

PulseSequence& PulseSequence::wait(double duration) {
  elements.emplace_back(Wait{duration});
  return *this;
}

PulseSequence& PulseSequence::readout(double window) {
  elements.emplace_back(Readout{window});
  return *this;
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool finite_non_negative(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

void PulseSequence::validate() const {
  require(!elements.empty() && std::holds_alternative<LaserInit>(elements.front()),
          "pulse sequence must start with LaserInit");
  int readouts = 0;
  for (const auto& e : elements) {
    std::visit(overloaded{
                   [](const LaserInit& l) {
                     require(finite_non_negative(l.duration), "laser duration must be >= 0");
                   },
                   [](const MwPulse& p) {
                     require(finite_non_negative(p.duration), "pulse duration must be >= 0");
                     require(std::isfinite(p.freq) && std::isfinite(p.phase),
                             "pulse frequency and phase must be finite");
                     require(finite_non_negative(p.rabi_freq), "rabi frequency must be >= 0");
                   },
                   [](const Wait& w) {
                     require(finite_non_negative(w.duration), "wait duration must be >= 0");
                   },
                   [&](const Readout& r) {
                     require(std::isfinite(r.window) && r.window > 0.0,
                             "readout window must be positive");
                     ++readouts;
                   }},
               e);
  }
  require(readouts == 1, "pulse sequence must contain exactly one Readout");
}

void CoherenceParams::validate() const {
  auto positive = [](double v) { return !std::isnan(v) && v > 0.0; };
  require(positive(t1_ms) && positive(t2_us) && positive(t2_star_us) &&
              positive(t_rho_rabi_us),
          "coherence times must be positive");
  require(std::isfinite(n_stretch) && n_stretch > 0.0, "stretch exponent must be positive");
}

namespace {

double stretched(double t, double t_coh, double n) {
  if (std::isinf(t_coh)) return 1.0;
  return std::exp(-std::pow(t / t_coh, n));
}

// exp(-(t1/T)^n) / exp(-(t0/T)^n), computed in log space.
double envelope_ratio(double t0, double t1, double t_coh, double n) {
  if (std::isinf(t_coh)) return 1.0;
  return std::exp(std::pow(t0 / t_coh, n) - std::pow(t1 / t_coh, n));
}

struct StaticFrame {
  HermitianEigen eig;
  std::vector<bool> excited;  // ms=+-1-like
  ComplexMatrix drive_up;     // polarization operator, excited <- ms0 block
  ComplexMatrix ms0_readout;  // ms=0 projector, inter-manifold terms removed
  int dim = 0;
  int nuc_dim = 1;
};

StaticFrame make_frame(const spin::SpinSystem& system, const spin::FieldEnvironment& env,
                       Polarization polarization) {
  StaticFrame f;
  const spin::HamiltonianMatrix h = spin::build_hamiltonian(system, env);
  f.eig = spin::eigenlevels(h);
  f.dim = h.dimension();
  f.nuc_dim = system.nuclear_dimension();

  std::vector<int> order(static_cast<std::size_t>(f.dim));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> character(static_cast<std::size_t>(f.dim));
  for (int k = 0; k < f.dim; ++k)
    character[static_cast<std::size_t>(k)] = spin::ms0_character(f.eig.vectors.col(k), f.nuc_dim);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return character[static_cast<std::size_t>(a)] > character[static_cast<std::size_t>(b)];
  });
  f.excited.assign(static_cast<std::size_t>(f.dim), true);
  for (int k = 0; k < f.nuc_dim; ++k) f.excited[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = false;

  const spin::SpinOperators s = spin::spin_operators(3);
  ComplexMatrix op = s.sx;
  if (polarization != Polarization::Linear) {
    ComplexMatrix p0 = ComplexMatrix::Zero(3, 3);
    p0(1, 1) = 1.0;
    ComplexMatrix pm = ComplexMatrix::Zero(3, 3);
    if (polarization == Polarization::SigmaPlus)
      pm(0, 0) = 1.0;
    else
      pm(2, 2) = 1.0;
    op = pm * s.sx * p0 + p0 * s.sx * pm;
  }
  const ComplexMatrix op_eig =
      f.eig.vectors.adjoint() * spin::electron_operator(op, f.nuc_dim) * f.eig.vectors;
  f.drive_up = ComplexMatrix::Zero(f.dim, f.dim);
  for (int r = 0; r < f.dim; ++r)
    for (int c = 0; c < f.dim; ++c)
      if (f.excited[static_cast<std::size_t>(r)] && !f.excited[static_cast<std::size_t>(c)])
        f.drive_up(r, c) = op_eig(r, c);

  ComplexMatrix p0 = ComplexMatrix::Zero(3, 3);
  p0(1, 1) = 1.0;
  f.ms0_readout =
      f.eig.vectors.adjoint() * spin::electron_operator(p0, f.nuc_dim) * f.eig.vectors;
  for (int r = 0; r < f.dim; ++r)
    for (int c = 0; c < f.dim; ++c)
      if (f.excited[static_cast<std::size_t>(r)] != f.excited[static_cast<std::size_t>(c)])
        f.ms0_readout(r, c) = 0.0;
  return f;
}

ComplexMatrix initial_state(const StaticFrame& f) {
  ComplexMatrix rho = ComplexMatrix::Zero(f.dim, f.dim);
  for (int k = 0; k < f.dim; ++k)
    if (!f.excited[static_cast<std::size_t>(k)]) rho(k, k) = 1.0 / f.nuc_dim;
  return rho;
}

// Diagonal frame change exp(i 2 pi dw t N1) applied as S rho S^H.
void shift_frame(ComplexMatrix& rho, const StaticFrame& f, double dw, double t) {
  if (dw == 0.0) return;
  const double angle = 2.0 * kPi * dw * t;
  const Complex phase(std::cos(angle), std::sin(angle));
  for (int r = 0; r < f.dim; ++r) {
    for (int c = 0; c < f.dim; ++c) {
      const bool er = f.excited[static_cast<std::size_t>(r)];
      const bool ec = f.excited[static_cast<std::size_t>(c)];
      if (er && !ec) rho(r, c) *= phase;
      if (!er && ec) rho(r, c) *= std::conj(phase);
    }
  }
}

double ms0_population(const ComplexMatrix& rho, const StaticFrame& f) {
  return (rho * f.ms0_readout).trace().real();
}

}  // namespace

PropagationResult propagate_sequence(const spin::SpinSystem& system,
                                     const spin::FieldEnvironment& env,
                                     const PulseSequence& seq,
                                     const CoherenceParams& coh,
                                     const PropagationOptions& options) {
  seq.validate();
  if (options.decoherence) coh.validate();
  require(options.readout_contrast >= 0.0 && options.readout_contrast <= 1.0,
          "readout contrast must be in [0, 1]");

  const StaticFrame frame = make_frame(system, env, options.polarization);
  const int dim = frame.dim;

  // Reference frame: first MW carrier.
  double reference = 0.0;
  for (const auto& e : seq.elements)
    if (const auto* p = std::get_if<MwPulse>(&e)) {
      reference = p->freq;
      break;
    }

  ComplexMatrix rho = initial_state(frame);
  double clock = 0.0;
  double free_time = 0.0;
  double drive_time = 0.0;
  const double t1_us = coh.t1_ms * 1000.0;
  PropagationResult result;

  auto free_evolve = [&](double duration) {
    if (duration == 0.0) return;
    for (int r = 0; r < dim; ++r) {
      for (int c = 0; c < dim; ++c) {
        const double hr = frame.eig.values(r) - (frame.excited[static_cast<std::size_t>(r)] ? reference : 0.0);
        const double hc = frame.eig.values(c) - (frame.excited[static_cast<std::size_t>(c)] ? reference : 0.0);
        const double angle = -2.0 * kPi * (hr - hc) * duration;
        rho(r, c) *= Complex(std::cos(angle), std::sin(angle));
      }
    }
    if (options.decoherence) {
      const double g = envelope_ratio(free_time, free_time + duration, coh.t2_star_us, coh.n_stretch);
      for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c)
          if (frame.excited[static_cast<std::size_t>(r)] != frame.excited[static_cast<std::size_t>(c)])
            rho(r, c) *= g;
      const double relax = std::isinf(t1_us) ? 1.0 : std::exp(-duration / t1_us);
      const double eq = rho.trace().real() / dim;
      for (int k = 0; k < dim; ++k) rho(k, k) = eq + (rho(k, k) - eq) * relax;
    }
    free_time += duration;
  };

  auto drive = [&](const MwPulse& p) {
    if (p.duration == 0.0) return;
    ComplexMatrix h = ComplexMatrix::Zero(dim, dim);
    for (int k = 0; k < dim; ++k)
      h(k, k) = frame.eig.values(k) - (frame.excited[static_cast<std::size_t>(k)] ? p.freq : 0.0);
    const double coupling = p.rabi_freq / std::sqrt(2.0);
    const Complex phase(std::cos(p.phase), -std::sin(p.phase));
    h += coupling * (phase * frame.drive_up + std::conj(phase) * frame.drive_up.adjoint());

    shift_frame(rho, frame, p.freq - reference, clock);
    const HermitianEigen dressed = jacobi_eigen(h);
    const ComplexMatrix u = unitary_propagator(dressed, p.duration);
    rho = u * rho * u.adjoint();
    if (options.decoherence) {
      const double g = envelope_ratio(drive_time, drive_time + p.duration,
                                      coh.t_rho_rabi_us, coh.n_stretch);
      if (g < 1.0) {
        ComplexMatrix in_dressed = dressed.vectors.adjoint() * rho * dressed.vectors;
        const ComplexMatrix diag = in_dressed.diagonal().asDiagonal();
        in_dressed = g * in_dressed + (1.0 - g) * diag;
        rho = dressed.vectors * in_dressed * dressed.vectors.adjoint();
      }
    }
    shift_frame(rho, frame, reference - p.freq, clock + p.duration);
    drive_time += p.duration;
  };

  for (const auto& element : seq.elements) {
    std::visit(overloaded{
                   [&](const LaserInit& l) {
                     rho = initial_state(frame);
                     free_time = 0.0;
                     drive_time = 0.0;
                     clock += l.duration;
                   },
                   [&](const MwPulse& p) {
                     drive(p);
                     clock += p.duration;
                   },
                   [&](const Wait& w) {
                     free_evolve(w.duration);
                     clock += w.duration;
                   },
                   [&](const Readout& r) {
                     result.ms0_population = ms0_population(rho, frame);
                     result.signal = 1.0 - options.readout_contrast * (1.0 - result.ms0_population);
                     result.trace = rho.trace().real();
                     result.purity = (rho * rho).trace().real();
                     clock += r.window;
                   }},
               element);
    if (options.record_trajectory) result.trajectory.push_back(ms0_population(rho, frame));
  }
  return result;
}

void DecayCurve::validate() const {
  require(times.size() == signal.size() && times.size() == sigma.size(),
          "decay curve arrays must have equal lengths");
  require(times.size() >= 8, "decay curve needs at least 8 points");
  for (std::size_t i = 0; i < times.size(); ++i) {
    require(std::isfinite(times[i]) && std::isfinite(signal[i]) && std::isfinite(sigma[i]) &&
                sigma[i] >= 0.0,
            "decay curve has non-finite or negative-sigma entries");
    if (i > 0) require(times[i] > times[i - 1], "decay curve times must be strictly increasing");
  }
}

void add_gaussian_noise(DecayCurve& curve, double sigma, std::uint64_t seed) {
  require(sigma >= 0.0, "noise sigma must be non-negative");
  NoiseSource rng(seed);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    curve.signal[i] = rng.normal(curve.signal[i], sigma);
    curve.sigma[i] = sigma;
  }
}

namespace {

void check_times(std::span<const double> times) {
  require(!times.empty(), "empty time grid");
  for (std::size_t i = 0; i < times.size(); ++i) {
    require(std::isfinite(times[i]), "time grid must be finite");
    if (i > 0) require(times[i] > times[i - 1], "time grid must be strictly increasing");
  }
}

DecayCurve make_curve(CurveKind kind, std::span<const double> times) {
  DecayCurve c;
  c.kind = kind;
  c.times.assign(times.begin(), times.end());
  c.signal.assign(times.size(), 0.0);
  c.sigma.assign(times.size(), 0.0);
  return c;
}

}  // namespace

DecayCurve rabi_trace(const spin::SpinSystem& system, const spin::FieldEnvironment& env,
                      double mw_freq, double rabi_freq, std::span<const double> times,
                      const CoherenceParams& coh, const PropagationOptions& options) {
  check_times(times);
  require(times.front() >= 0.0, "pulse lengths must be non-negative");
  DecayCurve out = make_curve(CurveKind::Rabi, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    PulseSequence seq;
    seq.laser(1.0).pulse(mw_freq, rabi_freq, 0.0, times[i]).readout(0.3);
    out.signal[i] = propagate_sequence(system, env, seq, coh, options).signal;
  }
  return out;
}

namespace {

// Resamples onto a uniform grid of the same length when spacing varies.
void uniform_samples(std::span<const double> times, std::span<const double> values,
                     std::vector<double>& t_out, std::vector<double>& v_out) {
  const std::size_t n = times.size();
  const double dt = (times.back() - times.front()) / static_cast<double>(n - 1);
  bool uniform = true;
  for (std::size_t i = 1; i < n; ++i)
    if (std::fabs((times[i] - times[i - 1]) - dt) > 1e-6 * dt) uniform = false;
  t_out.resize(n);
  v_out.resize(n);
  if (uniform) {
    std::copy(times.begin(), times.end(), t_out.begin());
    std::copy(values.begin(), values.end(), v_out.begin());
    return;
  }
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = times.front() + dt * static_cast<double>(i);
    while (j + 2 < n && times[j + 1] < t) ++j;
    const double w = std::clamp((t - times[j]) / (times[j + 1] - times[j]), 0.0, 1.0);
    t_out[i] = t;
    v_out[i] = (1.0 - w) * values[j] + w * values[j + 1];
  }
}

// |sum_i x_i w_i exp(-2 pi i f t_i)| on f_j = j / (pad n dt), j = 0 .. pad n / 2.
std::vector<Complex> padded_dft(const std::vector<double>& x, double dt, int pad,
                                std::vector<double>& freqs) {
  const std::size_t n = x.size();
  const std::size_t bins = static_cast<std::size_t>(pad) * n / 2 + 1;
  const double df = 1.0 / (static_cast<double>(pad) * static_cast<double>(n) * dt);
  std::vector<Complex> out(bins);
  freqs.resize(bins);
  for (std::size_t j = 0; j < bins; ++j) {
    const double f = df * static_cast<double>(j);
    freqs[j] = f;
    const double angle = -2.0 * kPi * f * dt;
    const Complex step(std::cos(angle), std::sin(angle));
    Complex phasor(1.0, 0.0);
    Complex acc(0.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      acc += x[i] * phasor;
      phasor *= step;
      if ((i & 63u) == 63u) phasor /= std::abs(phasor);
    }
    out[j] = acc;
  }
  return out;
}

}  // namespace

double modulation_depth(std::span<const double> times, std::span<const double> signal) {
  require(times.size() == signal.size() && times.size() >= 16,
          "modulation_depth needs at least 16 samples");
  std::vector<double> t;
  std::vector<double> x;
  uniform_samples(times, signal, t, x);
  const std::size_t n = x.size();
  const double dt = t[1] - t[0];
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  for (double& v : x) v -= mean;

  // Even extension to 2n samples avoids the wrap-around discontinuity.
  const std::size_t m = 2 * n;
  std::vector<double> ext(m);
  for (std::size_t i = 0; i < n; ++i) {
    ext[i] = x[i];
    ext[m - 1 - i] = x[i];
  }
  std::vector<Complex> spec(m);
  for (std::size_t k = 0; k < m; ++k) {
    Complex acc(0.0, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double angle = -2.0 * kPi * static_cast<double>((k * i) % m) / static_cast<double>(m);
      acc += ext[i] * Complex(std::cos(angle), std::sin(angle));
    }
    spec[k] = acc;
  }
  const double df = 1.0 / (static_cast<double>(m) * dt);
  std::size_t peak = 1;
  for (std::size_t k = 2; k <= m / 2; ++k)
    if (std::abs(spec[k]) > std::abs(spec[peak])) peak = k;
  const double f_dom = df * static_cast<double>(peak);

  // Analytic signal restricted to the band around the dominant line.
  std::vector<Complex> band(m, Complex(0.0, 0.0));
  for (std::size_t k = 1; k < m / 2; ++k) {
    const double f = df * static_cast<double>(k);
    if (f >= 0.5 * f_dom && f <= 1.5 * f_dom) band[k] = 2.0 * spec[k];
  }
  std::vector<double> envelope(n);
  for (std::size_t i = 0; i < n; ++i) {
    Complex acc(0.0, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      if (band[k] == Complex(0.0, 0.0)) continue;
      const double angle = 2.0 * kPi * static_cast<double>((k * i) % m) / static_cast<double>(m);
      acc += band[k] * Complex(std::cos(angle), std::sin(angle));
    }
    envelope[i] = std::abs(acc) / static_cast<double>(m);
  }
  const std::size_t lo = n / 10;
  const std::size_t hi = n - n / 10;
  const auto [mn, mx] = std::minmax_element(envelope.begin() + static_cast<long>(lo),
                                            envelope.begin() + static_cast<long>(hi));
  if (*mx + *mn <= 0.0) return 0.0;
  return (*mx - *mn) / (*mx + *mn);
}

DecayCurve simulate_fid(const spin::SpinSystem& system, const spin::FieldEnvironment& env,
                        const CoherenceParams& coh, double detuning,
                        std::span<const double> times, const CurveShape& shape,
                        Branch branch) {
  check_times(times);
  require(coh.t2_star_us > 0.0 && coh.n_stretch > 0.0, "T2* and n must be positive");
  const auto lines = spin::transitions(system, env);
  require(!lines.empty(), "no allowed transitions");
  double total = 0.0;
  double centroid = 0.0;
  for (const auto& l : lines) {
    total += l.strength;
    centroid += l.strength * l.frequency;
  }
  centroid /= total;

  std::vector<spin::Transition> selected;
  for (const auto& l : lines) {
    const bool lower = l.frequency < centroid;
    if (lower == (branch == Branch::Lower)) selected.push_back(l);
  }
  // Degenerate branches (no splitting): use every line.
  if (selected.empty()) selected = lines;
  double weight = 0.0;
  double branch_center = 0.0;
  for (const auto& l : selected) {
    weight += l.strength;
    branch_center += l.strength * l.frequency;
  }
  branch_center /= weight;
  const double mw = branch_center + detuning;

  DecayCurve out = make_curve(CurveKind::Fid, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    double sum = 0.0;
    for (const auto& l : selected)
      sum += (l.strength / weight) * std::cos(2.0 * kPi * (l.frequency - mw) * times[i]);
    out.signal[i] =
        shape.baseline + shape.amplitude * stretched(times[i], coh.t2_star_us, coh.n_stretch) * sum;
  }
  return out;
}

double larmor_13c(double b_mt) { return constants::kGamma13C * std::fabs(b_mt); }

DecayCurve simulate_hahn(const CoherenceParams& coh, double larmor_freq,
                         std::span<const double> times, const CurveShape& shape,
                         double modulation) {
  check_times(times);
  require(std::isfinite(larmor_freq) && larmor_freq >= 0.0, "larmor frequency must be >= 0");
  require(coh.t2_us > 0.0 && coh.n_stretch > 0.0, "T2 and n must be positive");
  require(modulation >= 0.0 && modulation <= 1.0, "modulation depth must be in [0, 1]");
  DecayCurve out = make_curve(CurveKind::Hahn, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double s = std::sin(kPi * larmor_freq * times[i]);
    const double bath = 1.0 - modulation * s * s * s * s;
    out.signal[i] =
        shape.baseline + shape.amplitude * stretched(times[i], coh.t2_us, coh.n_stretch) * bath;
  }
  return out;
}

DecayCurve simulate_relaxometry(const CoherenceParams& coh, std::span<const double> times,
                                const CurveShape& shape) {
  check_times(times);
  require(coh.t1_ms > 0.0, "T1 must be positive");
  DecayCurve out = make_curve(CurveKind::T1, times);
  const double t1_us = coh.t1_ms * 1000.0;
  for (std::size_t i = 0; i < times.size(); ++i)
    out.signal[i] = shape.baseline + shape.amplitude * stretched(times[i], t1_us, 1.0);
  return out;
}

std::vector<OscillationComponent> extract_frequencies(const DecayCurve& curve,
                                                      int max_components) {
  require(max_components >= 1, "max_components must be at least 1");
  require(curve.times.size() == curve.signal.size(), "curve arrays must have equal lengths");
  require(curve.size() >= 2 * static_cast<std::size_t>(max_components) && curve.size() >= 4,
          "fewer points than 2 x max_components");
  std::vector<double> t;
  std::vector<double> y;
  uniform_samples(curve.times, curve.signal, t, y);
  const std::size_t n = y.size();
  const double dt = t[1] - t[0];
  const double span = t.back() - t.front();
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  std::vector<double> x(n);
  double window_sum = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n - 1));
    x[i] = (y[i] - mean) * w;
    window_sum += w;
    scale = std::max(scale, std::fabs(y[i] - mean));
  }
  if (scale <= 1e-12 * std::max(1.0, std::fabs(mean))) return {};

  std::vector<double> freqs;
  const std::vector<Complex> spec = padded_dft(x, dt, 8, freqs);
  std::vector<double> mag(spec.size());
  for (std::size_t j = 0; j < spec.size(); ++j) mag[j] = std::abs(spec[j]);

  const double resolution = 1.0 / (static_cast<double>(n) * dt);
  const double f_min = 2.0 * resolution;
  std::vector<std::size_t> peaks;
  for (std::size_t j = 1; j + 1 < mag.size(); ++j)
    if (freqs[j] >= f_min && mag[j] > mag[j - 1] && mag[j] >= mag[j + 1]) peaks.push_back(j);
  if (peaks.empty()) return {};

  std::vector<double> sorted = mag;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
  const double noise_floor = sorted[sorted.size() / 2];
  std::stable_sort(peaks.begin(), peaks.end(),
                   [&](std::size_t a, std::size_t b) { return mag[a] > mag[b]; });
  const double threshold = std::max(5.0 * noise_floor, 0.1 * mag[peaks.front()]);

  std::vector<std::size_t> chosen;
  for (std::size_t j : peaks) {
    if (chosen.size() >= static_cast<std::size_t>(max_components)) break;
    if (mag[j] <= threshold) break;
    const bool near = std::any_of(chosen.begin(), chosen.end(), [&](std::size_t c) {
      return std::fabs(freqs[c] - freqs[j]) < 1.5 * resolution;
    });
    if (!near) chosen.push_back(j);
  }
  if (chosen.empty()) return {};

  // Joint refinement: c + exp(-u t) [d + sum_k a_k cos + b_k sin].
  const std::size_t k_count = chosen.size();
  std::vector<double> p{mean, 0.0, 0.5 / span};
  std::vector<fit::Bounds> bounds{{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()},
                                  {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()},
                                  {0.0, 20.0 / span}};
  for (std::size_t j : chosen) {
    const double amp = 2.0 / window_sum;
    const double f0 = freqs[j];
    // DFT phase is referenced to t[0]; shift to t = 0.
    const Complex ref = spec[j] * std::polar(1.0, 2.0 * kPi * f0 * t.front());
    p.push_back(f0);
    p.push_back(amp * ref.real());
    p.push_back(-amp * ref.imag());
    bounds.push_back({f0 - resolution, f0 + resolution});
    bounds.push_back({-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()});
    bounds.push_back({-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()});
  }
  auto residuals = [&](std::span<const double> q, std::span<double> r) {
    for (std::size_t i = 0; i < n; ++i) {
      double osc = q[1];
      for (std::size_t k = 0; k < k_count; ++k) {
        const double ph = 2.0 * kPi * q[3 + 3 * k] * t[i];
        osc += q[4 + 3 * k] * std::cos(ph) + q[5 + 3 * k] * std::sin(ph);
      }
      r[i] = q[0] + std::exp(-q[2] * (t[i] - t.front())) * osc - y[i];
    }
  };
  const fit::LmResult lm = fit::levenberg_marquardt(residuals, n, p, bounds);

  std::vector<OscillationComponent> out;
  for (std::size_t k = 0; k < k_count; ++k)
    out.push_back({lm.params[3 + 3 * k], std::hypot(lm.params[4 + 3 * k], lm.params[5 + 3 * k])});
  std::stable_sort(out.begin(), out.end(), [](const OscillationComponent& a, const OscillationComponent& b) {
    return a.amplitude > b.amplitude;
  });
  return out;
}

namespace {

double initial_decay_time(const std::vector<double>& t, const std::vector<double>& y,
                          double baseline, double amplitude) {
  const double target = std::fabs(amplitude) / std::exp(1.0);
  for (std::size_t i = 0; i < t.size(); ++i)
    if (std::fabs(y[i] - baseline) <= target) return std::max(t[i], 1e-9);
  return 2.0 * (t.back() - t.front());
}

}  // namespace

EnvelopeFit fit_decay_envelope(const DecayCurve& curve, EnvelopeModel model,
                               const EnvelopeFitOptions& options) {
  curve.validate();
  require(options.n_lower > 0.0 && options.n_lower < options.n_upper,
          "stretch exponent bounds are invalid");
  const auto [mn, mx] = std::minmax_element(curve.signal.begin(), curve.signal.end());
  if (*mx - *mn <= 1e-12 * std::max(1.0, std::fabs(*mx)))
    throw NumericError("fit_decay_envelope: constant signal");

  const std::size_t n = curve.size();
  const bool weighted = std::all_of(curve.sigma.begin(), curve.sigma.end(),
                                    [](double s) { return s > 0.0; });
  const auto& t = curve.times;
  const auto& y = curve.signal;
  const double span = t.back() - t.front();
  const double dt_min = span / static_cast<double>(10 * n);
  constexpr double kInf = std::numeric_limits<double>::infinity();

  const std::size_t tail = std::max<std::size_t>(2, n / 10);
  const double tail_mean =
      std::accumulate(y.end() - static_cast<long>(tail), y.end(), 0.0) / static_cast<double>(tail);
  const double head_mean = (y[0] + y[1] + y[2]) / 3.0;

  std::vector<double> start;
  std::vector<fit::Bounds> bounds;
  int k_osc = 0;
  std::vector<double> t_guesses;

  switch (model) {
    case EnvelopeModel::SingleExp:
    case EnvelopeModel::Stretched: {
      const double amp = head_mean - tail_mean;
      start = {tail_mean, amp, initial_decay_time(t, y, tail_mean, amp)};
      bounds = {{-kInf, kInf}, {-kInf, kInf}, {dt_min, 1e3 * span}};
      if (model == EnvelopeModel::Stretched) {
        start.push_back(std::clamp(options.n_initial, options.n_lower, options.n_upper));
        bounds.push_back({options.n_lower, options.n_upper});
      }
      t_guesses = {start[2], span / 10.0, span / 3.0, span};
      break;
    }
    case EnvelopeModel::StretchedTimesOsc: {
      require(options.oscillation_components >= 1, "need at least one oscillation component");
      const auto comps = extract_frequencies(curve, options.oscillation_components);
      if (comps.empty()) throw NumericError("fit_decay_envelope: no oscillation found");
      const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
      start = {mean, span / 3.0, std::clamp(options.n_initial, options.n_lower, options.n_upper)};
      bounds = {{-kInf, kInf}, {dt_min, 1e3 * span}, {options.n_lower, options.n_upper}};
      const double resolution = 1.0 / span;
      for (const auto& c : comps) {
        start.push_back(c.frequency);
        start.push_back(c.amplitude);
        start.push_back(0.0);
        bounds.push_back({std::max(0.0, c.frequency - resolution), c.frequency + resolution});
        bounds.push_back({-kInf, kInf});
        bounds.push_back({-kInf, kInf});
      }
      k_osc = static_cast<int>(comps.size());
      t_guesses = {span / 10.0, span / 3.0, span};
      break;
    }
  }

  auto residuals = [&](std::span<const double> q, std::span<double> r) {
    for (std::size_t i = 0; i < n; ++i) {
      double value = 0.0;
      switch (model) {
        case EnvelopeModel::SingleExp:
          value = q[0] + q[1] * std::exp(-t[i] / q[2]);
          break;
        case EnvelopeModel::Stretched:
          value = q[0] + q[1] * std::exp(-std::pow(t[i] / q[2], q[3]));
          break;
        case EnvelopeModel::StretchedTimesOsc: {
          double osc = 0.0;
          for (int k = 0; k < k_osc; ++k) {
            const double ph = 2.0 * kPi * q[3 + 3 * static_cast<std::size_t>(k)] * t[i];
            osc += q[4 + 3 * static_cast<std::size_t>(k)] * std::cos(ph) +
                   q[5 + 3 * static_cast<std::size_t>(k)] * std::sin(ph);
          }
          value = q[0] + std::exp(-std::pow(t[i] / q[1], q[2])) * osc;
          break;
        }
      }
      r[i] = (value - y[i]) / (weighted ? curve.sigma[i] : 1.0);
    }
  };

  // Multi-start over the decay time; keep the lowest residual, preferring
  // converged runs.
  const std::size_t t_index = model == EnvelopeModel::StretchedTimesOsc ? 1 : 2;
  fit::LmResult best;
  bool have = false;
  for (double guess : t_guesses) {
    std::vector<double> p = start;
    p[t_index] = std::clamp(guess, bounds[t_index].lower, bounds[t_index].upper);
    fit::LmResult r = fit::levenberg_marquardt(residuals, n, p, bounds);
    const bool better = !have || (r.converged && !best.converged) ||
                        (r.converged == best.converged && r.chi_square < best.chi_square);
    if (better) {
      best = std::move(r);
      have = true;
    }
  }

  EnvelopeFit out;
  out.residual_norm = best.residual_norm;
  out.converged = best.converged;
  out.iterations = best.iterations;
  switch (model) {
    case EnvelopeModel::SingleExp:
    case EnvelopeModel::Stretched:
      out.baseline = best.params[0];
      out.amplitude = best.params[1];
      out.t_coh = best.params[2];
      out.baseline_error = best.errors[0];
      out.amplitude_error = best.errors[1];
      out.t_coh_error = best.errors[2];
      if (model == EnvelopeModel::Stretched) {
        out.n_stretch = best.params[3];
        out.n_stretch_error = best.errors[3];
      }
      break;
    case EnvelopeModel::StretchedTimesOsc: {
      out.baseline = best.params[0];
      out.baseline_error = best.errors[0];
      out.t_coh = best.params[1];
      out.t_coh_error = best.errors[1];
      out.n_stretch = best.params[2];
      out.n_stretch_error = best.errors[2];
      for (int k = 0; k < k_osc; ++k) {
        const std::size_t b = 3 + 3 * static_cast<std::size_t>(k);
        const double amp = std::hypot(best.params[b + 1], best.params[b + 2]);
        out.oscillations.push_back({best.params[b], amp});
        out.amplitude += amp;
      }
      std::stable_sort(out.oscillations.begin(), out.oscillations.end(),
                       [](const OscillationComponent& a, const OscillationComponent& b) {
                         return a.amplitude > b.amplitude;
                       });
      break;
    }
  }
  return out;
}

}  // namespace nvkit::dynamics
