#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "error.hpp"
#include "formats.hpp"
#include "random.hpp"
#include "support.hpp"

using namespace nvkit;
using namespace nvkit::formats;

namespace {

std::size_t error_line(void (*fn)(const std::string&), const std::string& text) {
  try {
    fn(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("spectrum round-trip") {
  odmr::OdmrSpectrum s;
  s.mode = odmr::Mode::Pulsed;
  NoiseSource rng(1);
  for (int i = 0; i < 300; ++i) {
    s.freqs.push_back(2800.0 + 0.1 * i + 1e-7 * rng.uniform());
    s.signal.push_back(1.0 - 0.1 * rng.uniform());
    s.sigma.push_back(i % 2 == 0 ? 0.0 : 0.005);
  }
  const auto back = parse_spectrum(format_spectrum(s), "s");
  CHECK(back.mode == s.mode);
  CHECK(back.freqs == s.freqs);
  CHECK(back.signal == s.signal);
  CHECK(back.sigma == s.sigma);
}

TEST_CASE("spectrum sigma column is optional") {
  const auto s = parse_spectrum("# odmr v1 mode=cw\n# comment\n\n2870 0.9\n2871 0.95\n", "s");
  CHECK(s.mode == odmr::Mode::Cw);
  CHECK(s.size() == 2);
  CHECK(s.sigma == std::vector<double>{0.0, 0.0});
}

TEST_CASE("decay round-trip for every kind") {
  for (auto kind : {dynamics::CurveKind::Rabi, dynamics::CurveKind::Fid, dynamics::CurveKind::Hahn,
                    dynamics::CurveKind::T1}) {
    dynamics::DecayCurve c;
    c.kind = kind;
    NoiseSource rng(static_cast<std::uint64_t>(kind));
    for (int i = 0; i < 50; ++i) {
      c.times.push_back(0.013 * i);
      c.signal.push_back(rng.normal(0.0, 1.0));
      c.sigma.push_back(0.01);
    }
    const auto back = parse_decay(format_decay(c), "d");
    CHECK(back.kind == kind);
    CHECK(back.times == c.times);
    CHECK(back.signal == c.signal);
    CHECK(back.sigma == c.sigma);
    dynamics::CurveKind k{};
    CHECK(curve_kind_from_name(curve_kind_name(kind), k));
    CHECK(k == kind);
  }
}

TEST_CASE("g2 and saturation round-trips") {
  photon::G2Curve g;
  for (int i = -20; i <= 20; ++i) {
    g.taus.push_back(0.37 * i);
    g.g2.push_back(1.0 - std::exp(-std::abs(0.37 * i) / 9.48));
    g.sigma.push_back(0.02);
  }
  const auto gb = parse_g2(format_g2(g), "g");
  CHECK(gb.taus == g.taus);
  CHECK(gb.g2 == g.g2);
  CHECK(gb.sigma == g.sigma);

  std::vector<photon::SaturationPoint> pts{{0.1, 1234.5}, {0.3, 3e4 / 7.0}, {2.0, 9.9e4}};
  const auto pb = parse_saturation(format_saturation(pts), "p");
  REQUIRE(pb.size() == pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(pb[i].power_mw == pts[i].power_mw);
    CHECK(pb[i].rate == pts[i].rate);
  }
  CHECK(parse_saturation("0.1 100\n0.2 180\n", "p").size() == 2);
}

TEST_CASE("parse errors carry the line number") {
  CHECK(error_line([](const std::string& t) { parse_spectrum(t, "s"); }, "# odmr v2 mode=cw\n") == 1);
  CHECK(error_line([](const std::string& t) { parse_spectrum(t, "s"); }, "# odmr v1 mode=cw\n2870 0.9\n2869 0.9\n") == 3);
  CHECK(error_line([](const std::string& t) { parse_spectrum(t, "s"); }, "# odmr v1 mode=cw\n2870 abc\n") == 2);
  CHECK(error_line([](const std::string& t) { parse_decay(t, "d"); }, "# decay v1 kind=echo\n") == 1);
  CHECK(error_line([](const std::string& t) { parse_decay(t, "d"); }, "# decay v1 kind=fid\n0 1\n1 1 0.1 7\n") == 3);
  CHECK(error_line([](const std::string& t) { parse_g2(t, "g"); }, "# g2 v1\n0 1\n0 1\n") == 3);
  CHECK(error_line([](const std::string& t) { parse_saturation(t, "p"); }, "# saturation v1\n0.1 10\n-1 5\n") == 3);
}

TEST_CASE("exact formatting round-trips doubles") {
  NoiseSource rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double v = std::ldexp(rng.uniform() - 0.5, static_cast<int>(rng.uniform() * 200) - 100);
    CHECK(std::stod(exact(v)) == v);
  }
}

TEST_CASE("noise source stream is fixed") {
  NoiseSource a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.normal(0, 1) == b.normal(0, 1));
  NoiseSource c(5);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = c.normal(0, 1);
    sum += v;
    sq += v * v;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.01));
  NoiseSource p(6);
  for (double mean : {3.0, 100.0}) {
    double s = 0.0;
    for (int i = 0; i < 20000; ++i) s += static_cast<double>(p.poisson(mean));
    CHECK(s / 20000 == doctest::Approx(mean).epsilon(0.02));
  }
}
