#pragma once

#include <Eigen/Dense>
#include <limits>

#include "semel/sem.hpp"

namespace semel {

/// Per-unit estimating-function values: row i is
///   ( b_i eps_i ; gt_ii (eps_i^2 - sigma2) + 2 eps_i sum_{j<i} gt_ij eps_j ; eps_i^2 - sigma2 )
/// with b_i the i-th column of X^T A(rho). Column sums reproduce the score
/// equations ( X^T A eps ; eps^T Gt eps - sigma2 tr Gt ; eps^T eps - n sigma2 ).
struct OmegaMatrix {
  Eigen::MatrixXd values;  // n x (k+2)
  Eigen::Index k = 0;
};

OmegaMatrix omega(const SemDesign& design, const Eigen::MatrixXd& gtilde,
                  const Eigen::MatrixXd& a_rho, const Eigen::VectorXd& eps, double sigma2);

enum class LambdaStatus { Converged, HullInfeasible, MaxIter };
const char* lambda_status_name(LambdaStatus status);

struct SolverOptions {
  double tol = 1e-10;         // relative gradient norm
  int max_iter = 100;
  double lambda_bound = 1e8;  // divergence => origin outside the hull
  double backtrack = 0.5;
};

struct LambdaSolution {
  Eigen::VectorXd lambda;
  LambdaStatus status = LambdaStatus::MaxIter;
  int iterations = 0;
  double gradient_norm = std::numeric_limits<double>::infinity();
};

/// Maximizes the concave dual sum(log(1 + lambda^T w_i)) over the open
/// region where every argument stays positive, by damped Newton with a
/// backtracking line search. Divergence of |lambda| signals that the origin
/// is not interior to the convex hull of the rows.
LambdaSolution solve_lambda(const OmegaMatrix& omegas, const SolverOptions& opts = {});

struct ElResult {
  double statistic = 0.0;  // +infinity when hull-infeasible
  LambdaSolution lambda;
  int df = 0;
};

/// The EL ratio 2 sum(log(1 + lambda^T w_i)) at the solved multiplier.
ElResult el_statistic(const OmegaMatrix& omegas, const SolverOptions& opts = {});

/// Implied probability weights p_i = 1 / (n (1 + lambda^T w_i)).
Eigen::VectorXd implied_weights(const OmegaMatrix& omegas, const Eigen::VectorXd& lambda);

struct ElTestReport {
  ElResult el;
  double threshold = 0.0;
  bool covered = false;
};

/// Evaluates the EL ratio at theta0 and compares with the chi-squared(k+2)
/// quantile. Hull-infeasible points count as not covered.
ElTestReport el_test(const SemDesign& design, const Eigen::VectorXd& y, const Theta& theta0,
                     double alpha, const SolverOptions& opts = {});

}  // namespace semel
