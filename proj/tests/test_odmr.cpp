#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "error.hpp"
#include "lm.hpp"
#include "odmr.hpp"
#include "support.hpp"

using namespace nvkit;
using testing::Gen;

namespace {

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> g;
  for (int i = 0; lo + step * i <= hi + 1e-9; ++i) g.push_back(lo + step * i);
  return g;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  return s;
}

std::vector<double> distinct_minima(const odmr::LineShapeModel& m) {
  auto c = m.centers;
  std::sort(c.begin(), c.end());
  return c;
}

}  // namespace

TEST_CASE("single NV at zero field with xi and Delta") {
  spin::FieldEnvironment env;
  env.shift_xi = 2.5;
  env.splitting_delta = 4.1;
  const auto model = odmr::dip_model({}, env, {});
  const auto c = distinct_minima(model);
  REQUIRE(c.size() == 2);
  CHECK(c[0] == doctest::Approx(2864.3).epsilon(1e-9));
  CHECK(c[1] == doctest::Approx(2880.7).epsilon(1e-9));

  const auto g = grid(2840, 2905, 0.05);
  const auto s = odmr::synthesize_spectrum({}, env, {}, g);
  const auto it = std::min_element(s.signal.begin(), s.signal.end());
  const double fmin = s.freqs[static_cast<std::size_t>(it - s.signal.begin())];
  CHECK((std::abs(fmin - 2864.3) < 0.05 || std::abs(fmin - 2880.7) < 0.05));
}

TEST_CASE("all-zero perturbation gives coincident dips at D") {
  const auto model = odmr::dip_model({}, {}, {});
  REQUIRE(model.size() == 2);
  CHECK(model.centers[0] == doctest::Approx(2870.0));
  CHECK(model.centers[1] == doctest::Approx(2870.0));
}

TEST_CASE("pulsed 14N spectrum resolves three dips per branch") {
  spin::SpinSystem sys;
  sys.nuclei.push_back(spin::HyperfineCoupling::nitrogen14());
  spin::FieldEnvironment env;
  env.b_lab = sys.orientation.axis * 4.6;
  odmr::SynthesisOptions opt;
  opt.mode = odmr::Mode::Pulsed;
  const auto g = grid(2730, 2752, 0.02);
  const auto s = odmr::synthesize_spectrum(sys, env, opt, g);
  // Local minima of the noiseless spectrum.
  std::vector<double> mins;
  for (std::size_t i = 1; i + 1 < s.size(); ++i)
    if (s.signal[i] < s.signal[i - 1] && s.signal[i] <= s.signal[i + 1]) mins.push_back(s.freqs[i]);
  REQUIRE(mins.size() == 3);
  CHECK(mins[1] - mins[0] == doctest::Approx(2.16).epsilon(0.02));
  CHECK(mins[2] - mins[1] == doctest::Approx(2.16).epsilon(0.02));
}

TEST_CASE("zero contrast gives a flat baseline") {
  odmr::SynthesisOptions opt;
  opt.contrast = 0.0;
  opt.baseline = 0.93;
  const auto g = grid(2800, 2940, 0.5);
  const auto s = odmr::synthesize_spectrum({}, {}, opt, g);
  for (double v : s.signal) CHECK(v == 0.93);
}

TEST_CASE("dip area is linear in contrast") {
  const auto g = grid(2000, 3700, 0.01);
  double first = 0.0;
  for (double c : {0.02, 0.04, 0.08}) {
    odmr::LineShapeModel m;
    m.centers = {2850.0};
    m.contrasts = {c};
    m.fwhms = {3.0};
    std::vector<double> depth;
    for (double f : g) depth.push_back(m.baseline - m.evaluate(f));
    const double area = trapezoid(g, depth);
    if (first == 0.0) first = area / c;
    CHECK(area / c == doctest::Approx(first).epsilon(1e-9));
  }
  // pi/2 * contrast * FWHM in the infinite-range limit
  CHECK(first == doctest::Approx(constants::kPi / 2.0 * 3.0).epsilon(2e-3));
}

TEST_CASE("ensemble spectrum is the mean of the four orientations") {
  spin::FieldEnvironment env;
  env.b_lab = Vec3(1.2, -2.0, 3.1);
  env.shift_xi = 1.0;
  env.splitting_delta = 0.7;
  const auto g = grid(2700, 3040, 0.25);
  odmr::SynthesisOptions ens;
  ens.ensemble = true;
  const auto total = odmr::synthesize_spectrum({}, env, ens, g);
  std::vector<double> depth(g.size(), 0.0);
  for (int k = 0; k < 4; ++k) {
    spin::SpinSystem sys;
    sys.orientation = spin::NvOrientation::from_index(k);
    const auto s = odmr::synthesize_spectrum(sys, env, {}, g);
    for (std::size_t i = 0; i < g.size(); ++i) depth[i] += 0.25 * (1.0 - s.signal[i]);
  }
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(1.0 - total.signal[i] - depth[i]) < 1e-12);
}

TEST_CASE("invert_shift_splitting inverts the two-line formula") {
  Gen gen(31);
  for (int c = 0; c < 500; ++c) {
    const double d = gen.uniform(2800, 2900), xi = gen.uniform(-20, 20), delta = gen.uniform(0, 20);
    const auto [lo, hi] = spin::resonance_frequencies_approx(d, xi, delta);
    const auto [x, y] = odmr::invert_shift_splitting(lo, hi, d);
    CHECK(std::abs(x - xi) < 1e-9);
    CHECK(std::abs(y - delta) < 1e-9);
  }
  const auto [x, y] = odmr::invert_shift_splitting(2864.3, 2880.7, 2870);
  CHECK(x == doctest::Approx(2.5));
  CHECK(y == doctest::Approx(4.1));
  const auto [x0, y0] = odmr::invert_shift_splitting(2870, 2870, 2870);
  CHECK(x0 == 0.0);
  CHECK(y0 == 0.0);
}

TEST_CASE("two-dip fit recovers centers under 0.5% noise") {
  odmr::OdmrSpectrum s;
  odmr::LineShapeModel truth;
  truth.centers = {2864.3, 2880.7};
  truth.contrasts = {0.1, 0.1};
  truth.fwhms = {1.5, 1.5};
  s.freqs = grid(2850, 2895, 0.05);
  for (double f : s.freqs) s.signal.push_back(truth.evaluate(f));
  s.sigma.assign(s.size(), 0.0);
  odmr::apply_noise(s, {odmr::NoiseSpec::Kind::Gaussian, 0.005, 0.0, 42});
  const auto r = odmr::fit_spectrum(s, 2);
  CHECK(r.converged);
  CHECK(std::abs(r.model.centers[0] - 2864.3) < 0.05);
  CHECK(std::abs(r.model.centers[1] - 2880.7) < 0.05);
  CHECK(r.xi_fit == doctest::Approx(2.5).epsilon(0.02));
  CHECK(r.delta_fit == doctest::Approx(4.1).epsilon(0.01));
  CHECK(r.delta_half_separation == doctest::Approx(8.2).epsilon(0.01));
}

TEST_CASE("single dip initialized at truth converges quickly") {
  odmr::LineShapeModel truth;
  truth.centers = {2870.0};
  truth.contrasts = {0.05};
  truth.fwhms = {6.0};
  odmr::OdmrSpectrum s;
  s.freqs = grid(2830, 2910, 0.2);
  for (double f : s.freqs) s.signal.push_back(truth.evaluate(f));
  s.sigma.assign(s.size(), 0.0);
  odmr::apply_noise(s, {odmr::NoiseSpec::Kind::Gaussian, 0.001, 0.0, 9});
  const auto r = odmr::fit_spectrum(s, 1, truth);
  CHECK(r.converged);
  CHECK(r.iterations <= 5);
  // Residuals are weighted by the recorded sigma.
  const double rms = r.residual_norm / std::sqrt(static_cast<double>(s.size()));
  CHECK(rms == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("synthesis/fit round-trip over 100 seeded cases") {
  Gen gen(1001);
  for (int c = 0; c < 100; ++c) {
    spin::FieldEnvironment env;
    env.shift_xi = gen.uniform(-5, 5);
    env.splitting_delta = gen.uniform(3, 10);
    odmr::SynthesisOptions opt;
    opt.mode = gen.coin() ? odmr::Mode::Cw : odmr::Mode::Pulsed;
    opt.contrast = gen.uniform(0.05, 0.2);
    const double fwhm = odmr::default_fwhm(opt.mode);
    opt.noise = {odmr::NoiseSpec::Kind::Gaussian, 0.01 * opt.contrast, 0.0, static_cast<std::uint64_t>(c)};
    const auto truth = odmr::dip_model({}, env, opt);
    const double lo = *std::min_element(truth.centers.begin(), truth.centers.end()) - 5 * fwhm;
    const double hi = *std::max_element(truth.centers.begin(), truth.centers.end()) + 5 * fwhm;
    const auto s = odmr::synthesize_spectrum({}, env, opt, grid(lo, hi, fwhm / 20.0));
    const auto r = odmr::fit_spectrum(s, 2);
    const auto want = distinct_minima(truth);
    for (std::size_t k = 0; k < 2; ++k) CHECK(std::abs(r.model.centers[k] - want[k]) < fwhm / 20.0);
  }
}

TEST_CASE("13C and 14N ladder in a six-dip pulsed fit") {
  spin::SpinSystem sys;
  sys.nuclei = {{spin::NuclearSpecies::N14, -2.16, 0.0}, spin::HyperfineCoupling::carbon13()};
  spin::FieldEnvironment env;
  env.b_lab = sys.orientation.axis * 5.17;
  odmr::SynthesisOptions opt;
  opt.mode = odmr::Mode::Pulsed;
  opt.noise = {odmr::NoiseSpec::Kind::Gaussian, 0.0005, 0.0, 5};
  const double centre = 2870.0 - constants::kGammaElectron * 5.17;
  const auto s = odmr::synthesize_spectrum(sys, env, opt, grid(centre - 9, centre + 9, 0.02));
  const auto r = odmr::fit_spectrum(s, 6);
  const auto& c = r.model.centers;
  REQUIRE(c.size() == 6);
  // Two 14N triplets offset by the 13C coupling.
  CHECK(c[1] - c[0] == doctest::Approx(2.16).epsilon(0.02));
  CHECK(c[3] - c[0] == doctest::Approx(6.43).epsilon(0.01));
  CHECK(c[5] - c[3] == doctest::Approx(2.16 * 2).epsilon(0.02));
}

TEST_CASE("neighbourhood seeding ignores noise wiggles") {
  odmr::OdmrSpectrum s;
  s.freqs = grid(2850, 2890, 0.5);
  odmr::LineShapeModel truth;
  truth.centers = {2860.0, 2880.0};
  truth.contrasts = {0.1, 0.1};
  truth.fwhms = {8.0, 8.0};
  for (double f : s.freqs) s.signal.push_back(truth.evaluate(f));
  s.sigma.assign(s.size(), 0.0);
  const auto seeds = odmr::seed_centers(s, 2);
  REQUIRE(seeds.size() == 2);
  CHECK(seeds[0] == doctest::Approx(2860.0).epsilon(1e-4));
  CHECK(seeds[1] == doctest::Approx(2880.0).epsilon(1e-4));
}

TEST_CASE("LM accepted steps never raise the residual norm") {
  Gen gen(77);
  for (int c = 0; c < 30; ++c) {
    std::vector<double> x, y;
    const double a = gen.uniform(0.5, 3), k = gen.uniform(0.1, 2), b = gen.uniform(-1, 1);
    for (int i = 0; i < 60; ++i) {
      x.push_back(0.1 * i);
      y.push_back(a * std::exp(-k * x.back()) + b + gen.uniform(-0.01, 0.01));
    }
    auto res = [&](std::span<const double> p, std::span<double> r) {
      for (std::size_t i = 0; i < x.size(); ++i) r[i] = p[0] * std::exp(-p[1] * x[i]) + p[2] - y[i];
    };
    const auto out = fit::levenberg_marquardt(res, x.size(), {1.0, 1.0, 0.0},
                                              {{0, 10}, {0.01, 10}, {-5, 5}});
    REQUIRE(!out.accepted_norms.empty());
    for (std::size_t i = 1; i < out.accepted_norms.size(); ++i)
      CHECK(out.accepted_norms[i] <= out.accepted_norms[i - 1]);
    CHECK(out.converged);
    CHECK(out.params[1] == doctest::Approx(k).epsilon(0.05));
  }
}

TEST_CASE("LM respects bounds") {
  auto res = [](std::span<const double> p, std::span<double> r) {
    r[0] = p[0] - 5.0;
    r[1] = p[1] + 5.0;
  };
  const auto out = fit::levenberg_marquardt(res, 2, {0.5, 0.5}, {{0, 1}, {0, 1}});
  CHECK(out.params[0] <= 1.0);
  CHECK(out.params[1] >= 0.0);
  CHECK(out.params[0] == doctest::Approx(1.0));
  CHECK(out.params[1] == doctest::Approx(0.0));
}

TEST_CASE("invalid spectra are rejected") {
  odmr::OdmrSpectrum s;
  s.freqs = {1, 2, 2};
  s.signal = {1, 1, 1};
  s.sigma = {0, 0, 0};
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  CHECK_THROWS_AS(odmr::fit_spectrum(s, 0), InvalidArgument);
}
