#pragma once

#include <Eigen/Dense>
#include <complex>

namespace nvkit {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;

struct HermitianEigen {
  RealVector values;      // ascending
  ComplexMatrix vectors;  // columns, orthonormal
  int sweeps = 0;
};

// Largest |A - A^H| entry, relative to the largest |A| entry (0 for a zero
// matrix).
double hermitian_defect(const ComplexMatrix& a);

// Cyclic complex Jacobi. Each rotation first removes the phase of a_pq and
// then applies the classic real rotation. Stops when the off-diagonal
// Frobenius norm drops below rel_tol * ||A||_F.
//
// Throws NumericError for a non-square input, a Hermitian defect above 1e-9,
// or when max_sweeps is exhausted.
HermitianEigen jacobi_eigen(const ComplexMatrix& a, double rel_tol = 1e-12,
                            int max_sweeps = 100);

// exp(-2*pi*i*H*t) for Hermitian H in MHz and t in µs, built from the Jacobi
// eigendecomposition.
ComplexMatrix unitary_propagator(const HermitianEigen& eig, double t_us);

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

}  // namespace nvkit
