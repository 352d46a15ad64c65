#include "random.hpp"

#include <cmath>

#include "constants.hpp"
#include "error.hpp"

namespace nvkit {

double NoiseSource::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double NoiseSource::uniform_open_low() { return 1.0 - uniform(); }

double NoiseSource::normal(double mean, double stddev) {
  const double u1 = uniform_open_low();
  const double u2 = uniform();
  const double z =
      std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * constants::kPi * u2);
  return mean + stddev * z;
}

std::int64_t NoiseSource::poisson(double mean) {
  require(std::isfinite(mean) && mean >= 0.0,
          "poisson mean must be finite and non-negative");
  if (mean == 0.0) return 0;
  if (mean < 30.0) {
    const double limit = std::exp(-mean);
    std::int64_t k = 0;
    double product = uniform_open_low();
    while (product > limit) {
      ++k;
      product *= uniform_open_low();
    }
    return k;
  }
  // PTRS (Hormann 1993).
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform() - 0.5;
    const double v = uniform_open_low();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    const double lhs = std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b);
    const double rhs = -mean + k * loglam - std::lgamma(k + 1.0);
    if (lhs <= rhs) return static_cast<std::int64_t>(k);
  }
}

void NoiseSource::add_gaussian(std::span<double> values, double stddev) {
  for (double& v : values) v = normal(v, stddev);
}

}  // namespace nvkit
