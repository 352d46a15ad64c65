#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dynamics.hpp"
#include "error.hpp"
#include "support.hpp"

using namespace nvkit;
using namespace nvkit::dynamics;
using testing::Gen;

namespace {

std::vector<double> grid(int n, double step, double start = 0.0) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = start + step * i;
  return g;
}

PropagationOptions coherent() {
  PropagationOptions o;
  o.decoherence = false;
  o.readout_contrast = 1.0;
  return o;
}

spin::SpinSystem n14() {
  spin::SpinSystem s;
  s.nuclei.push_back(spin::HyperfineCoupling::nitrogen14());
  return s;
}

spin::FieldEnvironment axial(const spin::SpinSystem& s, double b) {
  spin::FieldEnvironment env;
  env.b_lab = s.orientation.axis * b;
  return env;
}

PulseSequence random_sequence(Gen& gen, const std::vector<spin::Transition>& lines, int n) {
  PulseSequence seq;
  seq.laser(1.0);
  for (int i = 0; i < n; ++i) {
    if (gen.integer(0, 2) == 0) {
      seq.wait(gen.uniform(0.0, 2.0));
    } else {
      const auto& l = lines[static_cast<std::size_t>(gen.integer(0, static_cast<int>(lines.size()) - 1))];
      seq.pulse(l.frequency + gen.uniform(-3, 3), gen.uniform(0.1, 10.0), gen.uniform(0, 6.3),
                gen.uniform(0.0, 0.5));
    }
  }
  seq.readout(0.3);
  return seq;
}

double cos_component(const DecayCurve& c, double f) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    re += c.signal[i] * std::cos(2 * constants::kPi * f * c.times[i]);
    im += c.signal[i] * std::sin(2 * constants::kPi * f * c.times[i]);
  }
  return std::hypot(re, im) / static_cast<double>(c.size());
}

}  // namespace

TEST_CASE("coherent evolution preserves trace and purity") {
  Gen gen(404);
  for (int c = 0; c < 20; ++c) {
    spin::SpinSystem sys = gen.coin() ? n14() : spin::SpinSystem{};
    spin::FieldEnvironment env;
    env.b_lab = Vec3(gen.uniform(-10, 10), gen.uniform(-10, 10), gen.uniform(-10, 10));
    env.shift_xi = gen.uniform(-3, 3);
    env.splitting_delta = gen.uniform(-3, 3);
    const auto lines = spin::transitions(sys, env);
    const auto seq = random_sequence(gen, lines, 200);
    auto opt = coherent();
    opt.record_trajectory = true;
    opt.polarization = static_cast<Polarization>(gen.integer(0, 2));
    const auto r = propagate_sequence(sys, env, seq, {}, opt);
    const double pure = 1.0 / sys.nuclear_dimension();
    CHECK(std::abs(r.trace - 1.0) < 1e-9);
    CHECK(std::abs(r.purity - pure) < 1e-9);
    CHECK(r.trajectory.size() == seq.elements.size());
    for (double p : r.trajectory) {
      CHECK(p >= -1e-12);
      CHECK(p <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("decoherence keeps the trace and lowers purity") {
  Gen gen(405);
  spin::SpinSystem sys;
  const auto env = axial(sys, 5.0);
  const auto lines = spin::transitions(sys, env);
  const auto seq = random_sequence(gen, lines, 50);
  PropagationOptions opt;
  const auto r = propagate_sequence(sys, env, seq, {}, opt);
  CHECK(std::abs(r.trace - 1.0) < 1e-9);
  CHECK(r.purity <= 1.0 + 1e-12);
}

TEST_CASE("resonant pi pulse inverts the population") {
  spin::SpinSystem sys;
  const auto env = axial(sys, 10.0);
  const auto lines = spin::transitions(sys, env);
  for (double fr : {0.5, 2.0, 10.0}) {
    for (auto pol : {Polarization::SigmaMinus, Polarization::Linear}) {
      auto opt = coherent();
      opt.polarization = pol;
      PulseSequence seq;
      seq.laser(1.0).pulse(lines[0].frequency, fr, 0.0, 1.0 / (2.0 * fr)).readout(0.3);
      const auto r = propagate_sequence(sys, env, seq, {}, opt);
      CHECK(1.0 - r.ms0_population >= 0.999);
    }
  }
}

TEST_CASE("zero-length pulse leaves ms=0 populated") {
  const auto sys = n14();
  const auto env = axial(sys, 5.0);
  PulseSequence seq;
  seq.laser(1.0).pulse(2730.0, 5.0, 0.0, 0.0).readout(0.3);
  const auto r = propagate_sequence(sys, env, seq, {}, coherent());
  PulseSequence none;
  none.laser(1.0).readout(0.3);
  const auto ref = propagate_sequence(sys, env, none, {}, coherent());
  CHECK(std::abs(r.ms0_population - ref.ms0_population) < 1e-12);
  // Transverse hyperfine mixing leaves the ms=0-like levels a little short of pure ms=0.
  CHECK(r.ms0_population == doctest::Approx(1.0).epsilon(1e-5));
  spin::SpinSystem bare;
  const auto b = propagate_sequence(bare, axial(bare, 5.0), seq, {}, coherent());
  CHECK(b.ms0_population == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("weak resonant drive follows cos^2") {
  spin::SpinSystem sys;
  const auto env = axial(sys, 30.0);
  const auto lines = spin::transitions(sys, env);
  auto opt = coherent();
  opt.polarization = Polarization::SigmaMinus;
  const auto t = grid(200, 0.02);
  const auto c = rabi_trace(sys, env, lines[0].frequency, 0.8, t, {}, opt);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double want = std::pow(std::cos(constants::kPi * 0.8 * t[i]), 2);
    CHECK(std::abs(c.signal[i] - want) < 1e-6);
  }
}

TEST_CASE("sequence validation") {
  PulseSequence seq;
  CHECK_THROWS_AS(seq.validate(), InvalidArgument);
  seq.laser(1.0);
  CHECK_THROWS_AS(seq.validate(), InvalidArgument);
  seq.readout(0.3);
  CHECK_NOTHROW(seq.validate());
  seq.readout(0.3);
  CHECK_THROWS_AS(seq.validate(), InvalidArgument);
  PulseSequence bad;
  bad.laser(1.0).wait(-1.0).readout(0.3);
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CoherenceParams coh;
  coh.t2_us = 0.0;
  CHECK_THROWS_AS(coh.validate(), InvalidArgument);
}

TEST_CASE("Rabi beats appear only for drives above the hyperfine spacing") {
  const auto sys = n14();
  const auto env = axial(sys, 10.0);
  const auto lines = spin::transitions(sys, env);
  const double mid = lines[1].frequency;
  const auto opt = coherent();
  const auto fast = rabi_trace(sys, env, mid, 5.7, grid(400, 0.025), {}, opt);
  CHECK(modulation_depth(fast.times, fast.signal) > 0.2);
  for (double fr : {0.9, 0.6}) {
    const auto slow = rabi_trace(sys, env, mid, fr, grid(400, 0.0625), {}, opt);
    CHECK(modulation_depth(slow.times, slow.signal) < 0.05);
  }
}

TEST_CASE("modulation depth of known envelopes") {
  const auto t = grid(1000, 0.01);
  std::vector<double> plain, beat;
  for (double x : t) {
    plain.push_back(std::cos(2 * constants::kPi * 3.0 * x));
    beat.push_back((1.0 + 0.5 * std::cos(2 * constants::kPi * 0.4 * x)) * std::cos(2 * constants::kPi * 3.0 * x));
  }
  CHECK(modulation_depth(t, plain) < 0.02);
  CHECK(modulation_depth(t, beat) == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("FID on the central 14N line oscillates at 2.16 MHz") {
  const auto sys = n14();
  const auto env = axial(sys, 10.0);
  CoherenceParams coh;
  coh.t2_star_us = 3.0;
  const auto c = simulate_fid(sys, env, coh, 0.0, grid(600, 0.01));
  const auto comps = extract_frequencies(c, 2);
  REQUIRE(!comps.empty());
  CHECK(comps[0].frequency == doctest::Approx(2.16).epsilon(0.02));
}

TEST_CASE("FID of the 14N + 13C configuration contains the three beat frequencies") {
  spin::SpinSystem sys;
  sys.nuclei = {spin::HyperfineCoupling::nitrogen14(), spin::HyperfineCoupling::carbon13()};
  const auto env = axial(sys, 10.0);
  CoherenceParams coh;
  coh.t2_star_us = 1.5;
  auto c = simulate_fid(sys, env, coh, 0.0, grid(600, 0.01));
  add_gaussian_noise(c, 0.01, 3);
  auto comps = extract_frequencies(c, 3);
  REQUIRE(comps.size() == 3);
  std::vector<double> f;
  for (const auto& k : comps) f.push_back(k.frequency);
  std::sort(f.begin(), f.end());
  CHECK(std::abs(f[0] - 1.07) < 0.05);
  CHECK(std::abs(f[1] - 3.23) < 0.05);
  CHECK(std::abs(f[2] - 5.4) < 0.05);
}

TEST_CASE("FID of a single line at zero detuning without dephasing is flat") {
  spin::SpinSystem sys;
  CoherenceParams coh;
  coh.t2_star_us = 1e15;
  const auto c = simulate_fid(sys, axial(sys, 5.0), coh, 0.0, grid(100, 0.05), {0.7, 0.1});
  for (double v : c.signal) CHECK(v == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("Hahn revivals are spaced by the inverse Larmor frequency") {
  CoherenceParams coh;
  coh.t2_us = 494.0;
  for (double fl : {0.05, 0.08, 0.2}) {
    const double step = 0.1;
    const auto t = grid(static_cast<int>(4.0 / fl / step) + 1, step);
    const auto c = simulate_hahn(coh, fl, t);
    std::vector<double> peaks;
    for (std::size_t i = 1; i + 1 < t.size(); ++i)
      if (c.signal[i] > c.signal[i - 1] && c.signal[i] >= c.signal[i + 1]) peaks.push_back(t[i]);
    REQUIRE(peaks.size() >= 3);
    for (std::size_t k = 1; k < peaks.size(); ++k)
      CHECK(std::abs(peaks[k] - peaks[k - 1] - 1.0 / fl) <= step + 1e-9);
  }
}

TEST_CASE("Hahn curve without bath modulation is a stretched exponential") {
  CoherenceParams coh;
  coh.t2_us = 20.0;
  coh.n_stretch = 1.7;
  const auto t = grid(100, 0.5);
  const auto c = simulate_hahn(coh, 0.0, t);
  for (std::size_t i = 0; i < t.size(); ++i)
    CHECK(c.signal[i] == doctest::Approx(std::exp(-std::pow(t[i] / 20.0, 1.7))).epsilon(1e-12));
}

TEST_CASE("13C Larmor frequency at 4.6 mT") {
  CHECK(larmor_13c(4.6) == doctest::Approx(0.0492586).epsilon(1e-5));
  CHECK(std::abs(larmor_13c(4.6) / 0.05 - 1.0) < 0.02);
}

TEST_CASE("relaxometry") {
  CoherenceParams coh;
  coh.t1_ms = 4.5;
  const std::vector<double> t{0.0, 1000.0, 4500.0};
  const auto c = simulate_relaxometry(coh, t, {2.0, 0.5});
  CHECK(c.signal[0] == doctest::Approx(2.5));
  CHECK((c.signal[2] - 0.5) / 2.0 == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  coh.t1_ms = 1e9;
  const auto flat = simulate_relaxometry(coh, grid(11, 100.0), {1.0, 0.0});
  CHECK(1.0 - flat.signal.back() < 1e-3);
}

TEST_CASE("stretched envelope fits recover T within 5 percent") {
  for (double T : {1.76, 494.0, 0.81}) {
    for (double n : {1.0, 1.5, 2.0}) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        CoherenceParams coh;
        coh.t2_us = T;
        coh.n_stretch = n;
        std::vector<double> t;
        for (int i = 0; i < 200; ++i) t.push_back(4.0 * T * i / 199.0);
        auto c = simulate_hahn(coh, 0.0, t);
        c.kind = CurveKind::Fid;
        add_gaussian_noise(c, 0.01, seed);
        const auto f = fit_decay_envelope(c, EnvelopeModel::Stretched);
        CHECK(std::abs(f.t_coh / T - 1.0) < 0.05);
        CHECK(f.n_stretch == doctest::Approx(n).epsilon(0.1));
      }
    }
  }
}

TEST_CASE("noiseless single exponential is recovered exactly") {
  CoherenceParams coh;
  coh.t1_ms = 2.0;
  const auto c = simulate_relaxometry(coh, grid(100, 80.0), {0.8, 0.15});
  const auto f = fit_decay_envelope(c, EnvelopeModel::SingleExp);
  CHECK(f.t_coh == doctest::Approx(2000.0).epsilon(1e-6));
  CHECK(f.amplitude == doctest::Approx(0.8).epsilon(1e-6));
  CHECK(f.baseline == doctest::Approx(0.15).epsilon(1e-6));
}

TEST_CASE("envelope fits are invariant under time-unit rescaling") {
  CoherenceParams coh;
  coh.t2_us = 3.0;
  coh.n_stretch = 1.3;
  std::vector<double> t;
  for (int i = 0; i < 150; ++i) t.push_back(0.08 * i);
  auto us = simulate_hahn(coh, 0.0, t);
  add_gaussian_noise(us, 0.01, 8);
  DecayCurve ns = us;
  for (double& x : ns.times) x *= 1000.0;
  for (auto model : {EnvelopeModel::Stretched, EnvelopeModel::SingleExp}) {
    const auto a = fit_decay_envelope(us, model);
    const auto b = fit_decay_envelope(ns, model);
    CHECK(b.t_coh / 1000.0 == doctest::Approx(a.t_coh).epsilon(1e-6));
    CHECK(b.n_stretch == doctest::Approx(a.n_stretch).epsilon(1e-6));
  }
}

TEST_CASE("damped oscillation fit") {
  spin::SpinSystem sys;
  CoherenceParams coh;
  coh.t2_star_us = 2.0;
  auto c = simulate_fid(sys, axial(sys, 10.0), coh, 2.16, grid(500, 0.01));
  add_gaussian_noise(c, 0.005, 4);
  EnvelopeFitOptions opt;
  opt.oscillation_components = 1;
  const auto f = fit_decay_envelope(c, EnvelopeModel::StretchedTimesOsc, opt);
  CHECK(f.t_coh == doctest::Approx(2.0).epsilon(0.05));
  REQUIRE(f.oscillations.size() == 1);
  CHECK(f.oscillations[0].frequency == doctest::Approx(2.16).epsilon(0.02));
}

TEST_CASE("frequency extraction on synthetic cosines") {
  DecayCurve one;
  one.times = grid(201, 0.05);
  for (double x : one.times) one.signal.push_back(std::cos(2 * constants::kPi * 2.16 * x));
  one.sigma.assign(one.size(), 0.0);
  auto comps = extract_frequencies(one, 3);
  REQUIRE(comps.size() == 1);
  CHECK(std::abs(comps[0].frequency - 2.16) < 0.02);

  DecayCurve three;
  three.times = grid(400, 0.02);
  for (double x : three.times) {
    double v = 0.0;
    for (double f : {1.07, 3.23, 5.4}) v += std::cos(2 * constants::kPi * f * x);
    three.signal.push_back(v);
  }
  three.sigma.assign(three.size(), 0.0);
  comps = extract_frequencies(three, 3);
  REQUIRE(comps.size() == 3);
  std::vector<double> f;
  for (const auto& k : comps) f.push_back(k.frequency);
  std::sort(f.begin(), f.end());
  CHECK(std::abs(f[0] - 1.07) < 0.05);
  CHECK(std::abs(f[1] - 3.23) < 0.05);
  CHECK(std::abs(f[2] - 5.4) < 0.05);
  for (std::size_t k = 1; k < comps.size(); ++k) CHECK(comps[k].amplitude <= comps[k - 1].amplitude);

  DecayCurve flat;
  flat.times = grid(100, 0.1);
  flat.signal.assign(100, 0.4);
  flat.sigma.assign(100, 0.0);
  CHECK(extract_frequencies(flat, 3).empty());
}

TEST_CASE("simulation is deterministic per seed") {
  const auto sys = n14();
  const auto env = axial(sys, 10.0);
  auto a = simulate_fid(sys, env, {}, 0.5, grid(200, 0.01));
  auto b = a;
  add_gaussian_noise(a, 0.02, 99);
  add_gaussian_noise(b, 0.02, 99);
  CHECK(a.signal == b.signal);
  CHECK(cos_component(a, 0.5) > 0.0);
}
