#include "linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "constants.hpp"
#include "error.hpp"

namespace nvkit {

double hermitian_defect(const ComplexMatrix& a) {
  if (a.size() == 0) return 0.0;
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return (a - a.adjoint()).cwiseAbs().maxCoeff() / scale;
}

namespace {

double off_diagonal_norm(const ComplexMatrix& a) {
  double sum = 0.0;
  for (Eigen::Index q = 0; q < a.cols(); ++q)
    for (Eigen::Index p = 0; p < a.rows(); ++p)
      if (p != q) sum += std::norm(a(p, q));
  return std::sqrt(sum);
}

}  // namespace

HermitianEigen jacobi_eigen(const ComplexMatrix& input, double rel_tol,
                            int max_sweeps) {
  if (input.rows() != input.cols())
    throw NumericError("eigen solver: matrix is not square");
  if (!input.allFinite())
    throw NumericError("eigen solver: matrix has non-finite entries");
  if (hermitian_defect(input) > 1e-9)
    throw NumericError("eigen solver: matrix is not Hermitian within 1e-9");

  const Eigen::Index n = input.rows();
  ComplexMatrix a = 0.5 * (input + input.adjoint());
  ComplexMatrix v = ComplexMatrix::Identity(n, n);
  const double threshold = rel_tol * a.norm();

  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    if (off_diagonal_norm(a) <= threshold) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Complex apq = a(p, q);
        const double r = std::abs(apq);
        if (r == 0.0) continue;
        const Complex phase = apq / r;
        const Complex phase_c = std::conj(phase);
        const double tau = (a(q, q).real() - a(p, p).real()) / (2.0 * r);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        // A <- A J with J = [[c, s], [-s e*, c e*]] on (p, q).
        for (Eigen::Index k = 0; k < n; ++k) {
          const Complex akp = a(k, p);
          const Complex akq = a(k, q);
          a(k, p) = c * akp - s * phase_c * akq;
          a(k, q) = s * akp + c * phase_c * akq;
        }
        // A <- J^H A
        for (Eigen::Index k = 0; k < n; ++k) {
          const Complex apk = a(p, k);
          const Complex aqk = a(q, k);
          a(p, k) = c * apk - s * phase * aqk;
          a(q, k) = s * apk + c * phase * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (Eigen::Index k = 0; k < n; ++k) {
          const Complex vkp = v(k, p);
          const Complex vkq = v(k, q);
          v(k, p) = c * vkp - s * phase_c * vkq;
          v(k, q) = s * vkp + c * phase_c * vkq;
        }
      }
    }
  }
  if (off_diagonal_norm(a) > threshold)
    throw NumericError("eigen solver: no convergence after " +
                       std::to_string(max_sweeps) + " sweeps");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return a(i, i).real() < a(j, j).real();
  });

  HermitianEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  out.sweeps = sweep;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.values(k) = a(src, src).real();
    out.vectors.col(k) = v.col(src);
  }
  return out;
}

ComplexMatrix unitary_propagator(const HermitianEigen& eig, double t_us) {
  const Eigen::Index n = eig.values.size();
  ComplexVector phases(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double angle = -2.0 * constants::kPi * eig.values(k) * t_us;
    phases(k) = Complex(std::cos(angle), std::sin(angle));
  }
  return eig.vectors * phases.asDiagonal() * eig.vectors.adjoint();
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace nvkit
