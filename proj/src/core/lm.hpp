#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace nvkit::fit {

struct Bounds {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

struct LmOptions {
  int max_iterations = 200;
  double relative_tolerance = 1e-10;  // on the residual sum of squares
  double gradient_tolerance = 1e-8;   // on ||J^T r||_inf
  double initial_lambda = 1e-3;
};

// Fills weighted residuals (model - data) / sigma for the given parameters.
using ResidualFn =
    std::function<void(std::span<const double> params, std::span<double> residuals)>;

struct LmResult {
  std::vector<double> params;
  std::vector<double> errors;  // 1-sigma, scaled by the reduced chi-square
  double residual_norm = 0.0;  // ||r||_2 of the weighted residuals
  double chi_square = 0.0;     // ||r||_2^2
  bool converged = false;
  int iterations = 0;
  std::string stop_reason;
  // Weighted residual norm after the start point and after every accepted
  // step; non-increasing by construction.
  std::vector<double> accepted_norms;
};

// Box-constrained Levenberg-Marquardt with Marquardt diagonal scaling and a
// central-difference Jacobian. Trial points are projected onto the bounds.
// A step is accepted only if it lowers the residual sum of squares.
//
// Convergence: relative decrease of the sum of squares below
// relative_tolerance, gradient infinity-norm below gradient_tolerance, or
// no decreasing step left at maximal damping. On hitting max_iterations the
// best point so far is returned with converged = false.
LmResult levenberg_marquardt(const ResidualFn& residuals, std::size_t n_residuals,
                             std::vector<double> initial,
                             const std::vector<Bounds>& bounds,
                             const LmOptions& options = {});

}  // namespace nvkit::fit
