#pragma once

// Shared helpers for the test executables: seeded generators and the
// characteristic-polynomial eigenvalue oracle.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "linalg.hpp"

namespace testing {

// Seeded generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  bool coin() { return (engine_() & 1u) != 0; }

  nvkit::ComplexMatrix hermitian(int n, double scale) {
    nvkit::ComplexMatrix m(n, n);
    for (int i = 0; i < n; ++i) {
      m(i, i) = uniform(-scale, scale);
      for (int j = i + 1; j < n; ++j) {
        m(i, j) = {uniform(-scale, scale), uniform(-scale, scale)};
        m(j, i) = std::conj(m(i, j));
      }
    }
    return m;
  }

 private:
  std::mt19937_64 engine_;
};

using Poly = std::vector<std::complex<double>>;  // ascending powers

inline Poly poly_mul(const Poly& a, const Poly& b) {
  Poly out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

// det(x I - A) by the Leibniz permutation sum.
inline Poly characteristic_polynomial(const nvkit::ComplexMatrix& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Poly total(static_cast<std::size_t>(n) + 1, 0.0);
  do {
    int inversions = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (perm[static_cast<std::size_t>(i)] > perm[static_cast<std::size_t>(j)]) ++inversions;
    Poly term{1.0};
    for (int i = 0; i < n; ++i) {
      const int j = perm[static_cast<std::size_t>(i)];
      Poly factor{-a(i, j)};
      if (i == j) factor.push_back(1.0);
      term = poly_mul(term, factor);
    }
    const double sign = inversions % 2 == 0 ? 1.0 : -1.0;
    for (std::size_t k = 0; k < term.size(); ++k) total[k] += sign * term[k];
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

inline std::complex<double> poly_eval(const Poly& p, std::complex<double> x) {
  std::complex<double> acc = 0.0;
  for (std::size_t k = p.size(); k-- > 0;) acc = acc * x + p[k];
  return acc;
}

// Durand-Kerner iteration for a monic polynomial, then Newton polishing.
inline std::vector<double> real_roots(const Poly& p) {
  const std::size_t n = p.size() - 1;
  double radius = 1.0;
  for (std::size_t k = 0; k < n; ++k) radius = std::max(radius, 1.0 + std::abs(p[k]));
  std::vector<std::complex<double>> z(n);
  const std::complex<double> seed(0.4, 0.9);
  for (std::size_t k = 0; k < n; ++k) z[k] = radius * std::pow(seed, static_cast<double>(k));
  for (int it = 0; it < 5000; ++it) {
    double change = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      std::complex<double> denom = 1.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != k) denom *= z[k] - z[j];
      const auto step = poly_eval(p, z[k]) / denom;
      z[k] -= step;
      change = std::max(change, std::abs(step));
    }
    if (change < 1e-15 * radius) break;
  }
  Poly dp(n);
  for (std::size_t k = 1; k <= n; ++k) dp[k - 1] = static_cast<double>(k) * p[k];
  std::vector<double> out;
  for (auto r : z) {
    for (int it = 0; it < 5; ++it) {
      const auto d = poly_eval(dp, r);
      if (std::abs(d) == 0.0) break;
      r -= poly_eval(p, r) / d;
    }
    out.push_back(r.real());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

inline double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

}  // namespace testing
