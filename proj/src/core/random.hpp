#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace nvkit {

// Seeded noise source with a platform-independent output stream.
//
// std::mt19937_64 is fully specified by the standard, but the standard
// distributions are not, so uniform, normal and Poisson variates are derived
// here: uniform from the top 53 bits, normal via Box-Muller (cosine branch
// only, one engine draw pair per variate), Poisson via Knuth multiplication
// below mean 30 and Hormann's PTRS transformed rejection above.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1).
  double uniform();
  // Uniform on (0, 1].
  double uniform_open_low();
  double normal(double mean, double stddev);
  std::int64_t poisson(double mean);

  void add_gaussian(std::span<double> values, double stddev);

 private:
  std::mt19937_64 engine_;
};

}  // namespace nvkit
