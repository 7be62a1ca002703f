#include "semel/el.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

#include "semel/chi2.hpp"
#include "semel/moments.hpp"

namespace semel {

const char* lambda_status_name(LambdaStatus status) {
  switch (status) {
    case LambdaStatus::Converged: return "converged";
    case LambdaStatus::HullInfeasible: return "hull-infeasible";
    case LambdaStatus::MaxIter: return "max-iter";
  }
  return "?";
}

OmegaMatrix omega(const SemDesign& design, const Eigen::MatrixXd& gtilde,
                  const Eigen::MatrixXd& a_rho, const Eigen::VectorXd& eps, double sigma2) {
  const Eigen::Index n = design.n;
  const Eigen::Index k = design.k;
  if (gtilde.rows() != n || gtilde.cols() != n || a_rho.rows() != n || a_rho.cols() != n ||
      eps.size() != n) {
    throw std::invalid_argument("omega: dimension mismatch");
  }
  if (!(sigma2 > 0.0)) throw std::invalid_argument("omega: sigma2 must be positive");

  const Eigen::MatrixXd b = design.x.transpose() * a_rho;  // k x n, column i is b_i

  OmegaMatrix om;
  om.k = k;
  om.values.resize(n, k + 2);
  om.values.leftCols(k) = eps.asDiagonal() * b.transpose();
  om.values.col(k) = martingale_terms(gtilde, eps, sigma2);
  om.values.col(k + 1) = eps.array().square() - sigma2;
  return om;
}

LambdaSolution solve_lambda(const OmegaMatrix& omegas, const SolverOptions& opts) {
  const Eigen::MatrixXd& w = omegas.values;
  const Eigen::Index n = w.rows();
  const Eigen::Index d = w.cols();
  if (n <= d) throw std::invalid_argument("solve_lambda: need n > k + 2");

  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::VectorXd omega_bar = w.colwise().mean();
  const double tol_scale = 1.0 + omega_bar.norm();
  const double feas_margin = 1.0 / (static_cast<double>(n) * static_cast<double>(n));

  LambdaSolution sol;
  sol.lambda = Eigen::VectorXd::Zero(d);

  Eigen::VectorXd u = Eigen::VectorXd::Ones(n);  // u_i = 1 + lambda^T w_i
  double obj = 0.0;                              // sum log u_i
  Eigen::VectorXd grad = omega_bar;

  for (int iter = 0; iter <= opts.max_iter; ++iter) {
    sol.iterations = iter;
    sol.gradient_norm = grad.norm();
    if (sol.gradient_norm <= opts.tol * tol_scale) {
      sol.status = LambdaStatus::Converged;
      return sol;
    }
    if (sol.lambda.norm() > opts.lambda_bound) {
      sol.status = LambdaStatus::HullInfeasible;
      return sol;
    }
    if (iter == opts.max_iter) break;

    // J = (1/n) sum w_i w_i^T / u_i^2, positive semidefinite
    const Eigen::MatrixXd scaled = u.cwiseInverse().asDiagonal() * w;
    Eigen::MatrixXd j = inv_n * (scaled.transpose() * scaled);
    Eigen::VectorXd dir = j.ldlt().solve(grad);
    if (!dir.allFinite() || dir.dot(grad) <= 0.0) {
      // Degenerate curvature; fall back to a scaled gradient step.
      const double curv = std::max(j.trace() / static_cast<double>(d), 1e-300);
      dir = grad / curv;
    }

    // Backtracking: halve until the log arguments stay clear of zero and
    // the concave objective actually increases (Armijo).
    const double slope = dir.dot(grad) * static_cast<double>(n);
    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Eigen::VectorXd trial = sol.lambda + step * dir;
      const Eigen::VectorXd u_trial = Eigen::VectorXd::Ones(n) + w * trial;
      if (u_trial.minCoeff() >= feas_margin) {
        const double obj_trial = u_trial.array().log().sum();
        if (obj_trial >= obj + 1e-4 * step * slope) {
          sol.lambda = trial;
          u = u_trial;
          obj = obj_trial;
          accepted = true;
          break;
        }
      }
      step *= opts.backtrack;
    }
    if (!accepted) {
      // Line search stalled at the feasibility boundary with a nonzero
      // gradient: the supremum is not attained inside the region.
      sol.status = sol.lambda.norm() > 1e3 ? LambdaStatus::HullInfeasible : LambdaStatus::MaxIter;
      return sol;
    }
    grad = inv_n * (w.transpose() * u.cwiseInverse());
  }
  sol.status = LambdaStatus::MaxIter;
  return sol;
}

ElResult el_statistic(const OmegaMatrix& omegas, const SolverOptions& opts) {
  ElResult res;
  res.df = static_cast<int>(omegas.values.cols());
  res.lambda = solve_lambda(omegas, opts);
  if (res.lambda.status == LambdaStatus::HullInfeasible) {
    res.statistic = std::numeric_limits<double>::infinity();
    return res;
  }
  const Eigen::ArrayXd u =
      1.0 + (omegas.values * res.lambda.lambda).array();
  res.statistic = std::max(0.0, 2.0 * u.log().sum());
  return res;
}

Eigen::VectorXd implied_weights(const OmegaMatrix& omegas, const Eigen::VectorXd& lambda) {
  const double n = static_cast<double>(omegas.values.rows());
  return ((1.0 + (omegas.values * lambda).array()) * n).inverse();
}

ElTestReport el_test(const SemDesign& design, const Eigen::VectorXd& y, const Theta& theta0,
                     double alpha, const SolverOptions& opts) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  check_theta(theta0, design.k);
  const Eigen::MatrixXd a0 = build_a(design.w, theta0.rho);
  const GMatrices gm = g_matrices(design.w, theta0.rho);
  const Eigen::VectorXd eps = a0 * (y - design.x * theta0.beta);
  const OmegaMatrix om = omega(design, gm.gtilde, a0, eps, theta0.sigma2);

  ElTestReport report;
  report.el = el_statistic(om, opts);
  report.threshold = chi2_quantile(report.el.df, alpha);
  report.covered = report.el.statistic <= report.threshold;
  return report;
}

}  // namespace semel
