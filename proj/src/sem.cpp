#include "semel/sem.hpp"

#include <Eigen/LU>
#include <cmath>
#include <stdexcept>

#include "semel/errors.hpp"

namespace semel {

namespace {

constexpr double kPivotRelTol = 1e-12;

Eigen::MatrixXd assemble_a(const WeightMatrix& w, double rho) {
  Eigen::MatrixXd a = (-rho) * w.values;
  a.diagonal().array() += 1.0;  // W has zero diagonal
  return a;
}

void check_pivots(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu, double max_norm) {
  const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(min_pivot > kPivotRelTol * max_norm)) {
    throw SingularityError("A(rho) is numerically singular: pivot " + std::to_string(min_pivot),
                           min_pivot);
  }
}

}  // namespace

SemDesign make_design(Eigen::MatrixXd x, WeightMatrix w) {
  check_weights(w);
  if (x.rows() != w.n) throw std::invalid_argument("design rows must match weight matrix size");
  if (x.cols() < 1) throw std::invalid_argument("design needs at least one column");
  if (w.n <= x.cols() + 2) throw std::invalid_argument("need n > k + 2");
  if (!x.allFinite()) throw std::invalid_argument("design entries must be finite");
  SemDesign d;
  d.n = w.n;
  d.k = x.cols();
  d.x = std::move(x);
  d.w = std::move(w);
  return d;
}

Eigen::VectorXd ramp_design_column(Eigen::Index n) {
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = static_cast<double>(i + 1) / static_cast<double>(n + 1);
  return x;
}

void check_theta(const Theta& theta, Eigen::Index k) {
  if (theta.beta.size() != k) throw std::invalid_argument("theta.beta length must equal k");
  if (!(std::abs(theta.rho) < 1.0)) throw std::invalid_argument("need |rho| < 1");
  if (!(theta.sigma2 > 0.0)) throw std::invalid_argument("need sigma2 > 0");
  if (!theta.beta.allFinite()) throw std::invalid_argument("theta.beta must be finite");
}

double raw_variance(ErrorDist dist) {
  switch (dist) {
    case ErrorDist::Normal: return 1.0;
    case ErrorDist::StudentT5: return 5.0 / 3.0;
    case ErrorDist::ChiSq4Centered: return 8.0;
  }
  throw std::invalid_argument("unknown error distribution");
}

ErrorDist parse_dist(const std::string& name) {
  if (name == "normal") return ErrorDist::Normal;
  if (name == "t5") return ErrorDist::StudentT5;
  if (name == "chisq4") return ErrorDist::ChiSq4Centered;
  throw std::invalid_argument("unknown distribution '" + name + "' (expected normal|t5|chisq4)");
}

const char* dist_name(ErrorDist dist) {
  switch (dist) {
    case ErrorDist::Normal: return "normal";
    case ErrorDist::StudentT5: return "t5";
    case ErrorDist::ChiSq4Centered: return "chisq4";
  }
  return "?";
}

Eigen::MatrixXd build_a(const WeightMatrix& w, double rho) {
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("need |rho| < 1");
  Eigen::MatrixXd a = assemble_a(w, rho);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  check_pivots(lu, std::max(a.cwiseAbs().maxCoeff(), 1e-300));
  return a;
}

GMatrices g_matrices(const WeightMatrix& w, double rho) {
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("need |rho| < 1");
  const Eigen::MatrixXd a = assemble_a(w, rho);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a.transpose());
  check_pivots(lu, std::max(a.cwiseAbs().maxCoeff(), 1e-300));
  GMatrices gm;
  // G A = W  <=>  A^T G^T = W^T
  gm.g = lu.solve(w.values.transpose()).transpose();
  gm.gtilde = 0.5 * (gm.g + gm.g.transpose());
  return gm;
}

Eigen::VectorXd residuals(const SemDesign& design, const Eigen::VectorXd& y, const Theta& theta) {
  check_theta(theta, design.k);
  if (y.size() != design.n) throw std::invalid_argument("y length must equal n");
  const Eigen::MatrixXd a = build_a(design.w, theta.rho);
  return a * (y - design.x * theta.beta);
}

Eigen::VectorXd error_draw(ErrorDist dist, Eigen::Index n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("n must be positive");
  Eigen::VectorXd v(n);
  switch (dist) {
    case ErrorDist::Normal:
      for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
      break;
    case ErrorDist::StudentT5:
      for (Eigen::Index i = 0; i < n; ++i) {
        const double z = rng.normal();
        double s = 0.0;
        for (int j = 0; j < 5; ++j) {
          const double g = rng.normal();
          s += g * g;
        }
        v(i) = z / std::sqrt(s / 5.0);
      }
      break;
    case ErrorDist::ChiSq4Centered:
      for (Eigen::Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < 4; ++j) {
          const double g = rng.normal();
          s += g * g;
        }
        v(i) = s - 4.0;
      }
      break;
  }
  return v;
}

SemSample simulate(const SemDesign& design, const Theta& theta, ErrorDist dist,
                   std::uint64_t seed) {
  check_theta(theta, design.k);
  const Eigen::MatrixXd a = assemble_a(design.w, theta.rho);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  check_pivots(lu, std::max(a.cwiseAbs().maxCoeff(), 1e-300));

  Rng rng(seed);
  Eigen::VectorXd eps = error_draw(dist, design.n, rng);
  eps *= std::sqrt(theta.sigma2 / raw_variance(dist));

  SemSample s;
  s.y = design.x * theta.beta + lu.solve(eps);
  s.theta_true = theta;
  s.seed = seed;
  return s;
}

}  // namespace semel
