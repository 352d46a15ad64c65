#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "photon_stats.hpp"
#include "random.hpp"
#include "support.hpp"

using namespace nvkit;
using namespace nvkit::photon;
using testing::Gen;

namespace {

const G2Params kTable{0.275, 1.481, 9.48, 0.365, 114.0, 0.313, 312.0};

G2Curve synth(const G2Params& p, const std::vector<double>& taus, double sigma, std::uint64_t seed) {
  G2Curve c;
  NoiseSource rng(seed);
  for (double t : taus) {
    c.taus.push_back(t);
    c.g2.push_back(sigma > 0 ? rng.normal(g2_model(t, p), sigma) : g2_model(t, p));
    c.sigma.push_back(sigma);
  }
  return c;
}

std::vector<double> uniform_taus(double lo, double hi, double step) {
  std::vector<double> t;
  for (int i = 0; lo + step * i <= hi + 1e-9; ++i) t.push_back(lo + step * i);
  return t;
}

}  // namespace

TEST_CASE("g2 at zero delay from the tabulated parameters") {
  CHECK(g2_model(0.275, kTable) == doctest::Approx(0.197).epsilon(1e-9));
  CHECK(g2_at_zero_delay(kTable) == doctest::Approx(1 - 1.481 + 0.365 + 0.313));
  CHECK(g2_at_zero_delay(kTable) < 0.2);
  CHECK(std::abs(g2_model(0.275 + 1e5, kTable) - 1.0) < 1e-6);
  const G2Params flat{0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0};
  for (double t : {-100.0, 0.0, 3.0, 1e4}) CHECK(g2_model(t, flat) == 1.0);
}

TEST_CASE("g2 is symmetric about tau0") {
  Gen gen(61);
  for (int c = 0; c < 200; ++c) {
    const G2Params p{gen.uniform(-5, 5), gen.uniform(0, 2), gen.uniform(0.1, 50),
                     gen.uniform(0, 1), gen.uniform(1, 500), gen.uniform(0, 1),
                     gen.uniform(1, 500)};
    const double x = gen.uniform(0, 1000);
    CHECK(g2_model(p.tau0 + x, p) == doctest::Approx(g2_model(p.tau0 - x, p)).epsilon(1e-12));
  }
}

TEST_CASE("antibunching branch rises monotonically") {
  Gen gen(62);
  for (int c = 0; c < 50; ++c) {
    const G2Params p{gen.uniform(-2, 2), gen.uniform(0.1, 1.0), gen.uniform(1, 30), 0, 1, 0, 1};
    double prev = g2_model(p.tau0, p);
    for (int i = 1; i < 200; ++i) {
      const double v = g2_model(p.tau0 + 0.5 * i, p);
      CHECK(v >= prev);
      CHECK(g2_model(p.tau0 - 0.5 * i, p) == doctest::Approx(v).epsilon(1e-12));
      prev = v;
    }
  }
}

TEST_CASE("noiseless g2 fit started at truth is exact") {
  const auto c = synth(kTable, uniform_taus(-600, 600, 0.5), 0.0, 0);
  const auto r = fit_g2(c, kTable);
  CHECK(r.params.tau0 == doctest::Approx(0.275).epsilon(1e-6));
  CHECK(r.params.c1 == doctest::Approx(1.481).epsilon(1e-6));
  CHECK(r.params.tau1 == doctest::Approx(9.48).epsilon(1e-6));
  CHECK(r.params.c2 == doctest::Approx(0.365).epsilon(1e-6));
  CHECK(r.params.tau2 == doctest::Approx(114.0).epsilon(1e-6));
  CHECK(r.params.c3 == doctest::Approx(0.313).epsilon(1e-6));
  CHECK(r.params.tau3 == doctest::Approx(312.0).epsilon(1e-6));
}

TEST_CASE("flat g2 curve gives vanishing amplitudes") {
  G2Curve c = synth({0, 0, 1, 0, 1, 0, 1}, uniform_taus(-300, 300, 1.0), 0.01, 4);
  const auto r = fit_g2(c);
  // Terms may trade off, and a dip narrower than the grid is unconstrained; judge on the samples.
  double worst = 0.0, sq = 0.0;
  for (double t : c.taus) {
    const double d = g2_model(t, r.params) - 1.0;
    worst = std::max(worst, std::abs(d));
    sq += d * d;
  }
  CHECK(std::sqrt(sq / static_cast<double>(c.taus.size())) < 0.002);
  CHECK(worst < 0.04);
}

TEST_CASE("fitted labels come out with ascending time constants") {
  G2Params swapped = kTable;
  std::swap(swapped.c2, swapped.c3);
  std::swap(swapped.tau2, swapped.tau3);
  const auto c = synth(kTable, uniform_taus(-600, 600, 0.5), 0.0, 0);
  const auto r = fit_g2(c, swapped);
  CHECK(r.params.tau1 < r.params.tau2);
  CHECK(r.params.tau2 < r.params.tau3);
}

TEST_CASE("g2 input validation") {
  G2Curve c;
  c.taus = {0, 1, 2};
  c.g2 = {1, 1, 1};
  c.sigma = {0, 0, 0};
  CHECK_THROWS_AS(fit_g2(c), InvalidArgument);
  G2Params bad = kTable;
  bad.tau1 = -1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("saturation curve shape") {
  const auto s = make_saturation(35.9e3, 1.10);
  CHECK(saturation_model(1.10, s) == doctest::Approx(35.9e3 / 2));
  double prev = 0.0, prev_slope = 1e300;
  for (int i = 1; i < 1000; ++i) {
    const double p = 0.01 * i;
    const double v = saturation_model(p, s);
    CHECK(v > prev);
    CHECK(v < s.c_sat);
    const double slope = (v - prev) / 0.01;
    if (i > 1) CHECK(slope <= prev_slope);
    prev_slope = slope;
    prev = v;
  }
  CHECK(saturation_model(1e12, s) < s.c_sat);
  for (double p : {1.10 / 100, 1.10 / 1000}) CHECK(saturation_model(p, s) / p == doctest::Approx(s.k_linear).epsilon(0.01));
}

TEST_CASE("calibration from a single operating point") {
  const double c = calibrate_c_sat(0.3, 7.7e3, 1.10);
  CHECK(c == doctest::Approx(7.7e3 * 1.4 / 0.3));
  CHECK(c == doctest::Approx(35.9e3).epsilon(1e-3));
  CHECK(saturation_model(0.3, make_saturation(c, 1.10)) == doctest::Approx(7.7e3));
}

TEST_CASE("saturation fit round-trip") {
  Gen gen(71);
  for (int k = 0; k < 30; ++k) {
    const double c_sat = gen.uniform(1e4, 1e6), p_sat = gen.uniform(0.2, 5.0);
    const auto truth = make_saturation(c_sat, p_sat);
    std::vector<SaturationPoint> pts;
    for (int i = 1; i <= 12; ++i) {
      const double p = p_sat * 0.25 * i;
      pts.push_back({p, saturation_model(p, truth) * (1.0 + gen.uniform(-0.002, 0.002))});
    }
    const auto f = fit_saturation(pts);
    CHECK(f.converged);
    CHECK(f.c_sat == doctest::Approx(c_sat).epsilon(0.02));
    CHECK(f.p_sat == doctest::Approx(p_sat).epsilon(0.03));
  }
  std::vector<SaturationPoint> few{{1.0, 10.0}, {1.0, 11.0}};
  CHECK_THROWS_AS(fit_saturation(few), InvalidArgument);
}
