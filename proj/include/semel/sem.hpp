#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "semel/rng.hpp"
#include "semel/weights.hpp"

namespace semel {

/// Regression design: y = X beta + u, u = rho W u + eps.
struct SemDesign {
  Eigen::MatrixXd x;  // n x k, fixed regressors
  WeightMatrix w;
  Eigen::Index n = 0;
  Eigen::Index k = 0;
};

/// Validates dimensions (n > k + 2) and finiteness.
SemDesign make_design(Eigen::MatrixXd x, WeightMatrix w);

/// The ramp regressor x_i = i / (n + 1), the simulation-study default design.
Eigen::VectorXd ramp_design_column(Eigen::Index n);

struct Theta {
  Eigen::VectorXd beta;
  double rho = 0.0;
  double sigma2 = 1.0;
};

void check_theta(const Theta& theta, Eigen::Index k);

/// Innovation laws available to the simulator; all have mean zero and a
/// finite fourth moment.
enum class ErrorDist { Normal, StudentT5, ChiSq4Centered };

/// Variance of the unscaled draw: 1, 5/3 and 8 respectively.
double raw_variance(ErrorDist dist);
ErrorDist parse_dist(const std::string& name);
const char* dist_name(ErrorDist dist);

struct SemSample {
  Eigen::VectorXd y;
  Theta theta_true;
  std::uint64_t seed = 0;
};

/// A(rho) = I - rho W, with an LU pivot check: throws SingularityError when
/// the smallest pivot falls below 1e-12 times the matrix max-norm.
Eigen::MatrixXd build_a(const WeightMatrix& w, double rho);

struct GMatrices {
  Eigen::MatrixXd g;       // W A(rho)^-1
  Eigen::MatrixXd gtilde;  // (G + G^T) / 2, exactly symmetric
};

/// Computes G by solving A(rho)^T Z = W^T rather than inverting A.
GMatrices g_matrices(const WeightMatrix& w, double rho);

/// eps = A(rho) (y - X beta).
Eigen::VectorXd residuals(const SemDesign& design, const Eigen::VectorXd& y, const Theta& theta);

/// i.i.d. draws in raw (unscaled) form: N(0,1), t(5), chi2_4 - 4.
Eigen::VectorXd error_draw(ErrorDist dist, Eigen::Index n, Rng& rng);

/// Draws eps scaled so Var(eps_i) = theta.sigma2, solves A(rho) u = eps and
/// returns y = X beta + u. Pure function of (design, theta, dist, seed).
SemSample simulate(const SemDesign& design, const Theta& theta, ErrorDist dist,
                   std::uint64_t seed);

}  // namespace semel
