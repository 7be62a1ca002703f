#pragma once

#include <Eigen/Dense>
#include <vector>

#include "semel/sem.hpp"

namespace semel {

struct MlFit {
  Theta theta_hat;
  double loglik = 0.0;
  std::vector<std::pair<double, double>> rho_profile;  // (rho, concentrated loglik)
  bool converged = false;
};

struct MleOptions {
  double rho_bound = 0.999;
  double grid_step = 0.01;
  double tol = 1e-8;  // golden-section interval width on rho
};

/// Exact Gaussian log-likelihood; log|A(rho)| comes from the LU
/// factorization with a determinant sign check.
double log_likelihood(const SemDesign& design, const Eigen::VectorXd& y, const Theta& theta);

/// Per-design quantities the profile scan reuses across samples: the
/// eigenvalues of W (so log|A(rho)| is O(n) per candidate rho) and W X.
struct MleContext {
  Eigen::VectorXcd w_eigenvalues;
  Eigen::MatrixXd wx;
};

MleContext make_mle_context(const SemDesign& design);

/// Profile MLE: beta and sigma2 are concentrated out at each rho; the
/// concentrated objective is maximized by a coarse grid scan followed by
/// golden-section refinement. The returned loglik is recomputed with the
/// exact LU route.
MlFit mle_with_context(const MleContext& ctx, const SemDesign& design, const Eigen::VectorXd& y,
                       const MleOptions& opts = {});
MlFit mle(const SemDesign& design, const Eigen::VectorXd& y, const MleOptions& opts = {});

/// LR(theta0) = 2 (L(theta_hat) - L(theta0)), clamped at zero; values below
/// -1e-6 raise InconsistentFitError.
double lr_statistic(const MlFit& fit, const SemDesign& design, const Eigen::VectorXd& y,
                    const Theta& theta0);
double lr_statistic(const SemDesign& design, const Eigen::VectorXd& y, const Theta& theta0);

struct LrTestReport {
  double statistic = 0.0;
  double threshold = 0.0;
  bool covered = false;
  MlFit fit;
};

LrTestReport lr_test(const SemDesign& design, const Eigen::VectorXd& y, const Theta& theta0,
                     double alpha, const MleOptions& opts = {});

}  // namespace semel
