#include "lm.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace nvkit::fit {

namespace {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Problem {
  const ResidualFn& fn;
  std::size_t m;
  const std::vector<Bounds>& bounds;

  Vector eval(const Vector& p) const {
    Vector r(static_cast<Eigen::Index>(m));
    fn(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
       std::span<double>(r.data(), m));
    return r;
  }

  double clamp(std::size_t j, double v) const {
    return std::clamp(v, bounds[j].lower, bounds[j].upper);
  }

  Matrix jacobian(const Vector& p) const {
    const Eigen::Index n = p.size();
    Matrix jac(static_cast<Eigen::Index>(m), n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      const double h = 1e-6 * std::max(std::fabs(p(j)), 1e-3);
      Vector hi = p;
      Vector lo = p;
      hi(j) = clamp(ju, p(j) + h);
      lo(j) = clamp(ju, p(j) - h);
      const double span = hi(j) - lo(j);
      if (span == 0.0) {
        jac.col(j).setZero();
        continue;
      }
      jac.col(j) = (eval(hi) - eval(lo)) / span;
    }
    return jac;
  }
};

}  // namespace

LmResult levenberg_marquardt(const ResidualFn& residuals, std::size_t n_residuals,
                             std::vector<double> initial,
                             const std::vector<Bounds>& bounds,
                             const LmOptions& options) {
  const std::size_t n = initial.size();
  if (n == 0) throw InvalidArgument("levenberg_marquardt: no parameters");
  if (bounds.size() != n)
    throw InvalidArgument("levenberg_marquardt: bounds/parameter size mismatch");
  if (n_residuals < n)
    throw InvalidArgument("levenberg_marquardt: fewer residuals than parameters");

  Problem problem{residuals, n_residuals, bounds};
  Vector p(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(initial[j]))
      throw InvalidArgument("levenberg_marquardt: non-finite start value");
    p(static_cast<Eigen::Index>(j)) = problem.clamp(j, initial[j]);
  }

  Vector r = problem.eval(p);
  if (!r.allFinite())
    throw NumericError("levenberg_marquardt: residuals not finite at start point");
  double cost = r.squaredNorm();

  LmResult result;
  result.accepted_norms.push_back(std::sqrt(cost));
  double lambda = options.initial_lambda;
  bool converged = false;
  std::string reason = "max iterations";
  int iter = 0;

  Matrix jac = problem.jacobian(p);
  for (; iter < options.max_iterations; ++iter) {
    const Vector grad = jac.transpose() * r;
    if (grad.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
      converged = true;
      reason = "gradient";
      break;
    }
    const Matrix jtj = jac.transpose() * jac;
    Vector diag = jtj.diagonal();
    for (Eigen::Index j = 0; j < diag.size(); ++j)
      if (diag(j) <= 0.0) diag(j) = 1e-12;

    bool accepted = false;
    while (lambda < 1e16) {
      Matrix a = jtj;
      a.diagonal() += lambda * diag;
      const Vector step = a.ldlt().solve(-grad);
      Vector trial = p + step;
      for (std::size_t j = 0; j < n; ++j) {
        const auto ej = static_cast<Eigen::Index>(j);
        trial(ej) = problem.clamp(j, trial(ej));
      }
      const Vector r_trial = problem.eval(trial);
      const double trial_cost = r_trial.allFinite()
                                    ? r_trial.squaredNorm()
                                    : std::numeric_limits<double>::infinity();
      if (trial_cost < cost) {
        const double rel = (cost - trial_cost) / std::max(cost, 1e-300);
        p = trial;
        r = r_trial;
        cost = trial_cost;
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        result.accepted_norms.push_back(std::sqrt(cost));
        if (rel < options.relative_tolerance) {
          converged = true;
          reason = "relative residual change";
        }
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      converged = true;
      reason = "no decreasing step";
      break;
    }
    if (converged) {
      ++iter;
      break;
    }
    jac = problem.jacobian(p);
  }

  // Covariance from the final Jacobian, scaled by the reduced chi-square.
  jac = problem.jacobian(p);
  const Matrix jtj = jac.transpose() * jac;
  const Matrix cov = jtj.completeOrthogonalDecomposition().pseudoInverse();
  const double dof = static_cast<double>(n_residuals - n);
  const double scale = dof > 0.0 ? cost / dof : 1.0;

  result.params.assign(p.data(), p.data() + p.size());
  result.errors.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double var = cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) * scale;
    result.errors[j] = std::sqrt(std::max(var, 0.0));
  }
  result.chi_square = cost;
  result.residual_norm = std::sqrt(cost);
  result.converged = converged;
  result.iterations = iter;
  result.stop_reason = reason;
  return result;
}

}  // namespace nvkit::fit
