#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "error.hpp"
#include "magnetometry.hpp"
#include "support.hpp"

using namespace nvkit;
using namespace nvkit::magnetometry;
using testing::Gen;

namespace {

// Independent evaluation in SI with CODATA constants.
double eta_dc_si(double c, double lambda, double t_l_s, double t2s_s) {
  const double hbar = 1.054571817e-34, mu_b = 9.2740100783e-24;
  return hbar / (2.0 * mu_b) / (lambda * std::sqrt(c * t_l_s)) / std::sqrt(t2s_s) * 1e9;
}

}  // namespace

TEST_CASE("reference sensors") {
  const auto s = sensitivity(single_emitter_reference());
  CHECK(s.eta_dc == doctest::Approx(174.9).epsilon(0.02));
  CHECK(s.eta_ac == doctest::Approx(10.4).epsilon(0.02));
  CHECK(s.notes.empty());
  const auto e = sensitivity(ensemble_reference());
  CHECK(e.eta_dc == doctest::Approx(25.7).epsilon(0.02));
  CHECK(e.eta_ac == doctest::Approx(6.6).epsilon(0.02));
  CHECK(e.notes.size() == 1);
  CHECK(s.lande_g == 2.0);
}

TEST_CASE("sensitivity matches an independent SI evaluation") {
  Gen gen(3);
  for (int c = 0; c < 100; ++c) {
    SensorParams p{gen.uniform(1e3, 1e9), gen.uniform(0.01, 0.5), gen.uniform(0.1, 2),
                   gen.uniform(0.05, 5), 0.0, 1e-6};
    p.t2 = p.t2_star * gen.uniform(1, 1000);
    const auto r = sensitivity(p);
    CHECK(r.eta_dc == doctest::Approx(eta_dc_si(p.count_rate, p.contrast, p.readout_window * 1e-6, p.t2_star * 1e-6)).epsilon(1e-12));
  }
}

TEST_CASE("parameter-doubling scaling") {
  Gen gen(4);
  for (int c = 0; c < 100; ++c) {
    SensorParams p{gen.uniform(1e3, 1e9), gen.uniform(0.01, 0.4), gen.uniform(0.1, 2),
                   gen.uniform(0.05, 5), 0.0, 1e-6};
    p.t2 = p.t2_star * gen.uniform(1, 1000);
    const double base = sensitivity(p).eta_dc;
    auto q = p;
    q.count_rate *= 2;
    CHECK(sensitivity(q).eta_dc == doctest::Approx(base / std::sqrt(2.0)).epsilon(1e-14));
    q = p;
    q.contrast *= 2;
    CHECK(sensitivity(q).eta_dc == doctest::Approx(base / 2.0).epsilon(1e-14));
    q = p;
    q.t2_star *= 2;
    q.t2 *= 2;
    CHECK(sensitivity(q).eta_dc == doctest::Approx(base / std::sqrt(2.0)).epsilon(1e-14));
  }
}

TEST_CASE("ac/dc ratio and unit invariance") {
  Gen gen(5);
  for (int c = 0; c < 100; ++c) {
    SensorParams p{gen.uniform(1e3, 1e9), gen.uniform(0.01, 0.4), gen.uniform(0.1, 2),
                   gen.uniform(0.05, 5), 0.0, 1e-6};
    p.t2 = p.t2_star * gen.uniform(1, 1000);
    const auto r = sensitivity(p);
    CHECK(r.eta_ac / r.eta_dc == doctest::Approx(std::sqrt(p.t2_star / p.t2)).epsilon(1e-14));
    SensorParams ns = p;
    ns.readout_window *= 1e3;
    ns.t2_star *= 1e3;
    ns.t2 *= 1e3;
    ns.time_unit_s = 1e-9;
    const auto r2 = sensitivity(ns);
    CHECK(r2.eta_dc == doctest::Approx(r.eta_dc).epsilon(1e-13));
    CHECK(r2.eta_ac == doctest::Approx(r.eta_ac).epsilon(1e-13));
  }
}

TEST_CASE("invalid sensor inputs") {
  auto p = single_emitter_reference();
  p.contrast = 1.5;
  CHECK_THROWS_AS(sensitivity(p), InvalidArgument);
  p = single_emitter_reference();
  p.t2 = 1.0;
  CHECK_THROWS_AS(sensitivity(p), InvalidArgument);
  p = single_emitter_reference();
  p.count_rate = 0.0;
  CHECK_THROWS_AS(sensitivity(p), InvalidArgument);
}
