#include <doctest.h>

#include <cmath>

#include "semel/el.hpp"
#include "semel/moments.hpp"
#include "semel/rng.hpp"

using namespace semel;

namespace {

Eigen::MatrixXd random_symmetric(Eigen::Index n, Rng& rng) {
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = 2.0 * rng.uniform01() - 1.0;
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

SemDesign ramp_grid_design(int rows, int cols) {
  WeightMatrix w = row_standardize(build_grid_queen(rows, cols));
  return make_design(ramp_design_column(w.n), std::move(w));
}

}  // namespace

TEST_CASE("dist_moments: exact values and scaling") {
  const DistMoments normal = dist_moments(ErrorDist::Normal, 1.0);
  CHECK(normal.sigma2 == 1.0);
  CHECK(normal.mu3 == 0.0);
  CHECK(normal.mu4 == 3.0);

  const DistMoments chi = dist_moments(ErrorDist::ChiSq4Centered, 8.0);
  CHECK(chi.sigma2 == 8.0);
  CHECK(chi.mu3 == doctest::Approx(32.0).epsilon(1e-14));
  CHECK(chi.mu4 == doctest::Approx(384.0).epsilon(1e-14));

  const DistMoments t5 = dist_moments(ErrorDist::StudentT5, 5.0 / 3.0);
  CHECK(t5.sigma2 == doctest::Approx(5.0 / 3.0));
  CHECK(t5.mu3 == 0.0);
  CHECK(t5.mu4 == doctest::Approx(25.0).epsilon(1e-14));

  // scaling: mu3 ~ c^3, mu4 ~ c^4
  const DistMoments normal4 = dist_moments(ErrorDist::Normal, 4.0);
  CHECK(normal4.mu4 == doctest::Approx(48.0).epsilon(1e-14));
  const DistMoments chi2x = dist_moments(ErrorDist::ChiSq4Centered, 2.0);
  const double c = std::sqrt(2.0 / 8.0);
  CHECK(chi2x.mu3 == doctest::Approx(32.0 * c * c * c).epsilon(1e-14));
  CHECK(chi2x.mu4 == doctest::Approx(384.0 * c * c * c * c).epsilon(1e-14));
}

TEST_CASE("dist_moments of chi2_4 - 4 agree with Monte Carlo" * doctest::test_suite("stat")) {
  const Eigen::Index n = 2000000;
  Rng rng(31);
  const Eigen::VectorXd draws = error_draw(ErrorDist::ChiSq4Centered, n, rng);
  const double m2 = draws.squaredNorm() / n;
  const double m3 = draws.array().cube().sum() / n;
  const double m4 = draws.array().pow(4).sum() / n;
  CHECK(m2 == doctest::Approx(8.0).epsilon(0.01));
  CHECK(m3 == doctest::Approx(32.0).epsilon(0.04));
  CHECK(m4 == doctest::Approx(384.0).epsilon(0.05));

  Rng rng2(32);
  const Eigen::VectorXd t = error_draw(ErrorDist::StudentT5, n, rng2);
  CHECK(t.squaredNorm() / n == doctest::Approx(5.0 / 3.0).epsilon(0.02));
  CHECK(t.array().pow(4).sum() / n == doctest::Approx(25.0).epsilon(0.25));
}

TEST_CASE("martingale_terms: diagonal case and the exact sum identity") {
  Rng rng(8);
  // diagonal Gtilde: no cross terms
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(4, 4);
  d.diagonal() << 1.0, -0.5, 2.0, 0.25;
  Eigen::VectorXd eps(4);
  eps << 1.0, 2.0, -1.0, 0.5;
  const Eigen::VectorXd terms = martingale_terms(d, eps, 1.5);
  for (Eigen::Index i = 0; i < 4; ++i) {
    CHECK(terms(i) == doctest::Approx(d(i, i) * (eps(i) * eps(i) - 1.5)).epsilon(1e-15));
  }

  // random inputs: sum(Yt) == eps' Gt eps - sigma2 tr(Gt) to 1e-10 relative
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 3 + static_cast<Eigen::Index>(rng.uniform01() * 20);
    const Eigen::MatrixXd gt = random_symmetric(n, rng);
    Eigen::VectorXd e(n);
    for (Eigen::Index i = 0; i < n; ++i) e(i) = rng.normal();
    const double sigma2 = 0.3 + 2.0 * rng.uniform01();
    const double lhs = martingale_terms(gt, e, sigma2).sum();
    const double rhs = e.dot(gt * e) - sigma2 * gt.trace();
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("martingale_terms: conditional mean zero given the past" * doctest::test_suite("stat")) {
  Rng rng(55);
  const Eigen::Index n = 10;
  const Eigen::MatrixXd gt = random_symmetric(n, rng);
  const double sigma2 = 1.0;
  // freeze eps_1..eps_{i-1}, resample eps_i
  Eigen::VectorXd eps(n);
  for (Eigen::Index i = 0; i < n; ++i) eps(i) = rng.normal();
  const Eigen::Index i = 6;
  const int m = 100000;
  double sum = 0.0;
  double sumsq = 0.0;
  for (int r = 0; r < m; ++r) {
    const double e_i = rng.normal();
    double cross = 0.0;
    for (Eigen::Index j = 0; j < i; ++j) cross += gt(i, j) * eps(j);
    const double term = gt(i, i) * (e_i * e_i - sigma2) + 2.0 * e_i * cross;
    sum += term;
    sumsq += term * term;
  }
  const double mean = sum / m;
  const double se = std::sqrt((sumsq / m - mean * mean) / m);
  CHECK(std::abs(mean) <= 4.0 * se);
}

TEST_CASE("quadratic_variance: pure linear and pure chi-squared forms") {
  const DistMoments gauss{1.0, 0.0, 3.0};

  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(5, 5);
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(5);
  e1(0) = 1.0;
  const auto lin = quadratic_variance(zero, e1, gauss);
  CHECK(lin.mean == 0.0);
  CHECK(lin.variance == 1.0);

  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(7, 7);
  const auto chi = quadratic_variance(eye, Eigen::VectorXd::Zero(7), gauss);
  CHECK(chi.mean == 7.0);
  CHECK(chi.variance == 14.0);
}

TEST_CASE("quadratic_variance rejects asymmetric coefficients") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
  a(0, 1) = 1.0;
  CHECK_THROWS_AS(quadratic_variance(a, Eigen::VectorXd::Zero(3), DistMoments{}),
                  std::invalid_argument);
}

TEST_CASE("sigma_matrix: gaussian cross blocks vanish; rho=0 gives sigma2 X'X") {
  const SemDesign design = ramp_grid_design(4, 4);
  const Eigen::MatrixXd a0 = build_a(design.w, 0.3);
  const GMatrices gm = g_matrices(design.w, 0.3);

  const SigmaBlocks gauss = sigma_matrix(design, a0, gm.gtilde, dist_moments(ErrorDist::Normal, 1.0));
  CHECK(gauss.sigma12.cwiseAbs().maxCoeff() == 0.0);
  CHECK(gauss.sigma13.cwiseAbs().maxCoeff() == 0.0);
  CHECK(gauss.sigma22 == doctest::Approx(2.0 * gm.gtilde.squaredNorm()).epsilon(1e-12));
  CHECK((gauss.full - gauss.full.transpose()).cwiseAbs().maxCoeff() == 0.0);

  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(design.n, design.n);
  const GMatrices gm0 = g_matrices(design.w, 0.0);
  const SigmaBlocks s0 = sigma_matrix(design, eye, gm0.gtilde, dist_moments(ErrorDist::Normal, 2.0));
  CHECK((s0.sigma11 - 2.0 * design.x.transpose() * design.x).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("sigma blocks are consistent with the linear-quadratic variance formula") {
  // variance(eps' Gt eps) must equal Sigma22 and variance(eps' I eps) Sigma33
  const SemDesign design = ramp_grid_design(4, 5);
  const double rho = -0.4;
  const Eigen::MatrixXd a0 = build_a(design.w, rho);
  const GMatrices gm = g_matrices(design.w, rho);
  for (ErrorDist dist : {ErrorDist::Normal, ErrorDist::StudentT5, ErrorDist::ChiSq4Centered}) {
    const DistMoments m = dist_moments(dist, raw_variance(dist));
    const SigmaBlocks sigma = sigma_matrix(design, a0, gm.gtilde, m);
    const auto q22 = quadratic_variance(gm.gtilde, Eigen::VectorXd::Zero(design.n), m);
    CHECK(std::abs(q22.variance - sigma.sigma22) <= 1e-10 * std::max(1.0, std::abs(sigma.sigma22)));
    const auto q33 = quadratic_variance(Eigen::MatrixXd::Identity(design.n, design.n),
                                        Eigen::VectorXd::Zero(design.n), m);
    CHECK(std::abs(q33.variance - sigma.sigma33) <= 1e-10 * std::max(1.0, std::abs(sigma.sigma33)));
    CHECK(q22.mean == doctest::Approx(m.sigma2 * gm.gtilde.trace()).epsilon(1e-12));
  }
}

TEST_CASE("standardized sums are asymptotically standard normal" * doctest::test_suite("stat")) {
  // Sigma^{-1/2} sum_i w_i should look N(0, I) coordinate-wise at n = 169.
  const SemDesign design = ramp_grid_design(13, 13);
  Theta theta;
  theta.beta = Eigen::VectorXd::Constant(1, 3.5);
  theta.rho = 0.15;

  const Eigen::MatrixXd a0 = build_a(design.w, theta.rho);
  const GMatrices gm = g_matrices(design.w, theta.rho);

  const int reps = 5000;
  int failures = 0;
  for (ErrorDist dist : {ErrorDist::Normal, ErrorDist::StudentT5, ErrorDist::ChiSq4Centered}) {
    theta.sigma2 = raw_variance(dist);
    const DistMoments m = dist_moments(dist, theta.sigma2);
    const SigmaBlocks sigma = sigma_matrix(design, a0, gm.gtilde, m);
    const Eigen::MatrixXd root_inv = inverse_sqrt(sigma.full);

    Eigen::MatrixXd z(reps, design.k + 2);
    for (int r = 0; r < reps; ++r) {
      const SemSample s = simulate(design, theta, dist, 777000 + r);
      const Eigen::VectorXd eps0 = a0 * (s.y - design.x * theta.beta);
      const Eigen::VectorXd sums =
          omega(design, gm.gtilde, a0, eps0, theta.sigma2).values.colwise().sum();
      z.row(r) = (root_inv * sums).transpose();
    }
    // one-sample KS against N(0,1) per coordinate, significance 0.01
    const double crit = 1.6276 / std::sqrt(static_cast<double>(reps));
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      std::vector<double> col(z.col(c).data(), z.col(c).data() + reps);
      std::sort(col.begin(), col.end());
      double ks = 0.0;
      for (int i = 0; i < reps; ++i) {
        const double f = 0.5 * std::erfc(-col[static_cast<size_t>(i)] / std::sqrt(2.0));
        ks = std::max(ks, std::max(f - i / static_cast<double>(reps),
                                   (i + 1) / static_cast<double>(reps) - f));
      }
      if (ks > crit) ++failures;
    }
  }
  CHECK(failures <= 1);  // 9 checks at the 1% level
}
