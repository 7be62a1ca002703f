#include "semel/moments.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace semel {

DistMoments dist_moments(ErrorDist dist, double sigma2_target) {
  if (!(sigma2_target > 0.0)) throw std::invalid_argument("sigma2_target must be positive");
  DistMoments raw;
  switch (dist) {
    case ErrorDist::Normal:
      raw = {1.0, 0.0, 3.0};
      break;
    case ErrorDist::StudentT5:
      // mu4 = 3 v^2 / ((v-2)(v-4)) = 25 for v = 5
      raw = {5.0 / 3.0, 0.0, 25.0};
      break;
    case ErrorDist::ChiSq4Centered:
      // central moments of chi2_d: mu2 = 2d, mu3 = 8d, mu4 = 12d^2 + 48d
      raw = {8.0, 32.0, 384.0};
      break;
  }
  const double c2 = sigma2_target / raw.sigma2;
  const double c = std::sqrt(c2);
  return {sigma2_target, raw.mu3 * c2 * c, raw.mu4 * c2 * c2};
}

SigmaBlocks sigma_matrix(const SemDesign& design, const Eigen::MatrixXd& a_rho,
                         const Eigen::MatrixXd& gtilde, const DistMoments& m) {
  const Eigen::Index n = design.n;
  const Eigen::Index k = design.k;
  if (a_rho.rows() != n || a_rho.cols() != n || gtilde.rows() != n || gtilde.cols() != n) {
    throw std::invalid_argument("sigma_matrix: dimension mismatch");
  }
  const double s2 = m.sigma2;
  const double s4 = s2 * s2;

  const Eigen::MatrixXd xa = design.x.transpose() * a_rho;  // k x n
  const Eigen::VectorXd d = gtilde.diagonal();

  SigmaBlocks out;
  out.sigma11 = s2 * (xa * xa.transpose());
  out.sigma12 = m.mu3 * (xa * d);
  out.sigma13 = m.mu3 * xa.rowwise().sum();
  out.sigma22 = 2.0 * s4 * gtilde.squaredNorm() + (m.mu4 - 3.0 * s4) * d.squaredNorm();
  out.sigma23 = (m.mu4 - s4) * gtilde.trace();
  out.sigma33 = static_cast<double>(n) * (m.mu4 - s4);

  out.full.setZero(k + 2, k + 2);
  out.full.topLeftCorner(k, k) = out.sigma11;
  out.full.block(0, k, k, 1) = out.sigma12;
  out.full.block(0, k + 1, k, 1) = out.sigma13;
  out.full.block(k, 0, 1, k) = out.sigma12.transpose();
  out.full.block(k + 1, 0, 1, k) = out.sigma13.transpose();
  out.full(k, k) = out.sigma22;
  out.full(k, k + 1) = out.sigma23;
  out.full(k + 1, k) = out.sigma23;
  out.full(k + 1, k + 1) = out.sigma33;
  return out;
}

std::pair<double, double> sigma_eigen_range_over_n(const SigmaBlocks& sigma, Eigen::Index n) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma.full / static_cast<double>(n));
  const auto& ev = es.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  Eigen::VectorXd ev = es.eigenvalues();
  const double floor = 1e-12 * std::max(ev.maxCoeff(), 0.0);
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = std::max(ev(i), floor);
  return es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

LinearQuadraticMoments quadratic_variance(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                          const std::vector<DistMoments>& per_unit) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.size() != n) throw std::invalid_argument("quadratic_variance: dimension mismatch");
  if (per_unit.size() != static_cast<size_t>(n)) {
    throw std::invalid_argument("quadratic_variance: need one DistMoments per unit");
  }
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("quadratic_variance: coefficient matrix must be symmetric");
  }

  LinearQuadraticMoments out;
  double cross = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& mi = per_unit[static_cast<size_t>(i)];
    out.mean += a(i, i) * mi.sigma2;
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& mj = per_unit[static_cast<size_t>(j)];
      out.variance += 2.0 * a(i, j) * a(i, j) * mi.sigma2 * mj.sigma2;
    }
    out.variance += b(i) * b(i) * mi.sigma2;
    cross += a(i, i) * a(i, i) * (mi.mu4 - 3.0 * mi.sigma2 * mi.sigma2) +
             2.0 * b(i) * a(i, i) * mi.mu3;
  }
  out.variance += cross;
  return out;
}

LinearQuadraticMoments quadratic_variance(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                          const DistMoments& m) {
  return quadratic_variance(a, b, std::vector<DistMoments>(static_cast<size_t>(a.rows()), m));
}

Eigen::VectorXd martingale_terms(const Eigen::MatrixXd& gtilde, const Eigen::VectorXd& eps,
                                 double sigma2) {
  const Eigen::Index n = gtilde.rows();
  if (gtilde.cols() != n || eps.size() != n) {
    throw std::invalid_argument("martingale_terms: dimension mismatch");
  }
  // cross_i = sum_{j < i} gt_ij eps_j
  const Eigen::VectorXd cross = gtilde.triangularView<Eigen::StrictlyLower>() * eps;
  return gtilde.diagonal().cwiseProduct(eps.array().square().matrix() -
                                        Eigen::VectorXd::Constant(n, sigma2)) +
         2.0 * eps.cwiseProduct(cross);
}

}  // namespace semel
