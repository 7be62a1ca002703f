#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "semel/sem.hpp"

namespace semel {

/// Second to fourth moments of one innovation: sigma2 = E eps^2,
/// mu3 = E eps^3, mu4 = E eps^4.
struct DistMoments {
  double sigma2 = 1.0;
  double mu3 = 0.0;
  double mu4 = 3.0;
};

/// Moments of the innovation scaled to variance `sigma2_target`.
/// Raw values: normal (1, 0, 3); t(5) (5/3, 0, 25); chi2_4 - 4 (8, 32, 384).
DistMoments dist_moments(ErrorDist dist, double sigma2_target);

/// Covariance of the summed estimating functions, assembled blockwise:
///   S11 = sigma^2 X^T A A^T X            S12 = mu3 X^T A diag(Gt)
///   S13 = mu3 X^T A 1                    S22 = 2 sigma^4 tr(Gt^2) + (mu4 - 3 sigma^4) |diag(Gt)|^2
///   S23 = (mu4 - sigma^4) tr(Gt)         S33 = n (mu4 - sigma^4)
struct SigmaBlocks {
  Eigen::MatrixXd full;     // (k+2) x (k+2), symmetric
  Eigen::MatrixXd sigma11;  // k x k
  Eigen::VectorXd sigma12;  // k
  Eigen::VectorXd sigma13;  // k
  double sigma22 = 0.0;
  double sigma23 = 0.0;
  double sigma33 = 0.0;
};

SigmaBlocks sigma_matrix(const SemDesign& design, const Eigen::MatrixXd& a_rho,
                         const Eigen::MatrixXd& gtilde, const DistMoments& m);

/// (lambda_min, lambda_max) of full / n; reported as a diagnostic, never
/// enforced.
std::pair<double, double> sigma_eigen_range_over_n(const SigmaBlocks& sigma, Eigen::Index n);

/// Symmetric inverse square root with eigenvalue floor 1e-12 * lambda_max.
Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& sym);

struct LinearQuadraticMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Exact mean and variance of Q = eps^T a eps + b^T eps for independent
/// mean-zero eps_i with per-unit moments. `a` must be symmetric.
LinearQuadraticMoments quadratic_variance(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                          const std::vector<DistMoments>& per_unit);
/// Homogeneous-innovation convenience overload.
LinearQuadraticMoments quadratic_variance(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                          const DistMoments& m);

/// Martingale differences Yt_i = gt_ii (eps_i^2 - sigma2) + 2 eps_i sum_{j<i} gt_ij eps_j.
/// Their sum equals eps^T Gt eps - sigma2 tr(Gt) exactly.
Eigen::VectorXd martingale_terms(const Eigen::MatrixXd& gtilde, const Eigen::VectorXd& eps,
                                 double sigma2);

}  // namespace semel
