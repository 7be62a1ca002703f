#include "semel/gaussian_ml.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "semel/chi2.hpp"
#include "semel/errors.hpp"

namespace semel {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log|det A(rho)| from the precomputed eigenvalues of W:
// det(I - rho W) = prod(1 - rho mu_i). Returns nullopt when the determinant
// is nonpositive or a factor underflows.
std::optional<double> log_det_from_eigenvalues(const Eigen::VectorXcd& mu, double rho) {
  double acc = 0.0;
  int negative_real_factors = 0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const std::complex<double> z = 1.0 - rho * mu(i);
    const double mod = std::abs(z);
    if (!(mod > 1e-300)) return std::nullopt;
    acc += std::log(mod);
    if (mu(i).imag() == 0.0 && z.real() < 0.0) ++negative_real_factors;
  }
  if (negative_real_factors % 2 != 0) return std::nullopt;
  return acc;
}

struct ProfilePoint {
  Eigen::VectorXd beta;
  double sigma2 = 0.0;
  double value = kNegInf;  // concentrated log-likelihood
  bool degenerate = false;
};

// Concentrated log-likelihood at fixed rho: least squares on the
// transformed system A(rho) y ~ A(rho) X beta, with A applied as
// v - rho (W v) through the cached products.
std::optional<ProfilePoint> profile_at(const MleContext& ctx, const SemDesign& design,
                                       const Eigen::VectorXd& y, const Eigen::VectorXd& wy,
                                       double rho) {
  const auto n = static_cast<double>(design.n);
  const auto log_det = log_det_from_eigenvalues(ctx.w_eigenvalues, rho);
  if (!log_det) return std::nullopt;

  const Eigen::MatrixXd xt = design.x - rho * ctx.wx;
  const Eigen::VectorXd yt = y - rho * wy;
  const Eigen::MatrixXd xtx = xt.transpose() * xt;
  Eigen::VectorXd beta = xtx.ldlt().solve(xt.transpose() * yt);
  if (!beta.allFinite()) return std::nullopt;

  ProfilePoint p;
  p.beta = std::move(beta);
  const Eigen::VectorXd r = yt - xt * p.beta;
  p.sigma2 = r.squaredNorm() / n;
  const double data_scale = yt.squaredNorm() / n + 1e-300;
  p.degenerate = p.sigma2 <= 1e-18 * data_scale;
  if (p.sigma2 <= 0.0) {
    p.degenerate = true;
    return p;
  }
  p.value = -0.5 * n * (kLog2Pi + 1.0) - 0.5 * n * std::log(p.sigma2) + *log_det;
  return p;
}

}  // namespace

double log_likelihood(const SemDesign& design, const Eigen::VectorXd& y, const Theta& theta) {
  check_theta(theta, design.k);
  if (y.size() != design.n) throw std::invalid_argument("y length must equal n");
  const auto n = static_cast<double>(design.n);

  Eigen::MatrixXd a = (-theta.rho) * design.w.values;
  a.diagonal().array() += 1.0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const double max_norm = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
  const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(min_pivot > 1e-12 * max_norm)) {
    throw SingularityError("A(rho) is numerically singular in log_likelihood", min_pivot);
  }
  double log_det = 0.0;
  double sign = static_cast<double>(lu.permutationP().determinant());
  for (Eigen::Index i = 0; i < design.n; ++i) {
    const double p = lu.matrixLU()(i, i);
    log_det += std::log(std::abs(p));
    if (p < 0.0) sign = -sign;
  }
  if (sign <= 0.0) {
    throw SingularityError("det A(rho) is nonpositive; rho is outside the valid branch",
                           min_pivot);
  }

  const Eigen::VectorXd eps = a * (y - design.x * theta.beta);
  return -0.5 * n * kLog2Pi - 0.5 * n * std::log(theta.sigma2) + log_det -
         eps.squaredNorm() / (2.0 * theta.sigma2);
}

MleContext make_mle_context(const SemDesign& design) {
  MleContext ctx;
  Eigen::EigenSolver<Eigen::MatrixXd> es(design.w.values, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("eigenvalue computation failed for W");
  }
  ctx.w_eigenvalues = es.eigenvalues();
  ctx.wx = design.w.values * design.x;
  return ctx;
}

MlFit mle_with_context(const MleContext& ctx, const SemDesign& design, const Eigen::VectorXd& y,
                       const MleOptions& opts) {
  if (y.size() != design.n) throw std::invalid_argument("y length must equal n");
  const Eigen::VectorXd wy = design.w.values * y;

  MlFit fit;
  const auto eval = [&](double rho) { return profile_at(ctx, design, y, wy, rho); };

  double best_rho = 0.0;
  double best_value = kNegInf;
  bool any_valid = false;
  for (double rho = -opts.rho_bound;; rho += opts.grid_step) {
    if (rho > opts.rho_bound) rho = opts.rho_bound;
    const auto p = eval(rho);
    if (p && !p->degenerate) {
      any_valid = true;
      fit.rho_profile.emplace_back(rho, p->value);
      if (p->value > best_value) {
        best_value = p->value;
        best_rho = rho;
      }
    }
    if (rho >= opts.rho_bound) break;
  }
  if (!any_valid) {
    fit.converged = false;
    return fit;
  }

  // Golden-section refinement around the best grid point.
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = std::max(best_rho - opts.grid_step, -opts.rho_bound);
  double b = std::min(best_rho + opts.grid_step, opts.rho_bound);
  const auto value_at = [&](double rho) {
    const auto p = eval(rho);
    return (p && !p->degenerate) ? p->value : kNegInf;
  };
  double x1 = b - gr * (b - a);
  double x2 = a + gr * (b - a);
  double f1 = value_at(x1);
  double f2 = value_at(x2);
  while (b - a > opts.tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = value_at(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = value_at(x1);
    }
  }
  double rho_hat = 0.5 * (a + b);
  auto final_point = eval(rho_hat);
  if (!final_point || final_point->value < best_value) {
    rho_hat = best_rho;
    final_point = eval(rho_hat);
  }
  if (!final_point) {
    fit.converged = false;
    return fit;
  }

  fit.theta_hat.beta = final_point->beta;
  fit.theta_hat.rho = rho_hat;
  fit.theta_hat.sigma2 = final_point->sigma2;
  if (final_point->degenerate) {
    fit.converged = false;
    return fit;
  }
  try {
    fit.loglik = log_likelihood(design, y, fit.theta_hat);
  } catch (const SingularityError&) {
    fit.converged = false;
    return fit;
  }
  fit.converged = true;
  return fit;
}

MlFit mle(const SemDesign& design, const Eigen::VectorXd& y, const MleOptions& opts) {
  return mle_with_context(make_mle_context(design), design, y, opts);
}

double lr_statistic(const MlFit& fit, const SemDesign& design, const Eigen::VectorXd& y,
                    const Theta& theta0) {
  if (!fit.converged) throw InconsistentFitError("lr_statistic: MLE did not converge");
  const double lr = 2.0 * (fit.loglik - log_likelihood(design, y, theta0));
  if (lr < -1e-6) {
    throw InconsistentFitError("lr_statistic: negative LR " + std::to_string(lr) +
                               "; optimizer failed");
  }
  return std::max(0.0, lr);
}

double lr_statistic(const SemDesign& design, const Eigen::VectorXd& y, const Theta& theta0) {
  return lr_statistic(mle(design, y), design, y, theta0);
}

LrTestReport lr_test(const SemDesign& design, const Eigen::VectorXd& y, const Theta& theta0,
                     double alpha, const MleOptions& opts) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  check_theta(theta0, design.k);
  LrTestReport report;
  report.fit = mle(design, y, opts);
  report.statistic = lr_statistic(report.fit, design, y, theta0);
  report.threshold = chi2_quantile(static_cast<int>(design.k) + 2, alpha);
  report.covered = report.statistic <= report.threshold;
  return report;
}

}  // namespace semel
