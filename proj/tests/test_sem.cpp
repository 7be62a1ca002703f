#include <doctest.h>

#include <cmath>

#include "semel/errors.hpp"
#include "semel/sem.hpp"

using namespace semel;

namespace {

WeightMatrix pair_weights() {
  WeightMatrix w;
  w.n = 2;
  w.values.setZero(2, 2);
  w.values(0, 1) = 1.0;
  w.values(1, 0) = 1.0;
  return w;
}

SemDesign ramp_grid_design(int rows, int cols, bool standardize = true) {
  WeightMatrix w = build_grid_queen(rows, cols);
  if (standardize) w = row_standardize(w);
  return make_design(ramp_design_column(w.n), std::move(w));
}

}  // namespace

TEST_CASE("build_a: identity at rho=0 and the 2x2 hand value") {
  const WeightMatrix w = pair_weights();
  const Eigen::MatrixXd a0 = build_a(w, 0.0);
  CHECK(a0 == Eigen::MatrixXd::Identity(2, 2));

  const Eigen::MatrixXd a = build_a(w, 0.5);
  CHECK(a(0, 0) == 1.0);
  CHECK(a(0, 1) == -0.5);
  CHECK(a(1, 0) == -0.5);
  CHECK(a(1, 1) == 1.0);
}

TEST_CASE("build_a: standardized queen grid stays nonsingular at rho=0.85") {
  const WeightMatrix w = row_standardize(build_grid_queen(7, 7));
  CHECK_NOTHROW(build_a(w, 0.85));
  CHECK_NOTHROW(build_a(w, -0.85));
}

TEST_CASE("build_a: singular A raises SingularityError with rho inside (-1,1)") {
  // binary queen 2x2 has spectral radius 3, so A(1/3) is exactly singular
  const WeightMatrix w = build_grid_queen(2, 2);
  CHECK_THROWS_AS(build_a(w, 1.0 / 3.0), SingularityError);
  CHECK_THROWS_AS(build_a(w, 1.2), std::invalid_argument);
}

TEST_CASE("g_matrices: rho=0 gives G = W") {
  const WeightMatrix w = build_grid_queen(3, 3);
  const GMatrices gm = g_matrices(w, 0.0);
  CHECK((gm.g - w.values).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((gm.gtilde - 0.5 * (w.values + w.values.transpose())).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("g_matrices: symmetric W gives symmetric G and Gtilde = G") {
  const WeightMatrix w = build_grid_queen(7, 7);
  const GMatrices gm = g_matrices(w, 0.1);
  CHECK((gm.g - gm.g.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((gm.gtilde - gm.g).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((gm.gtilde - gm.gtilde.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("g_matrices: 2x2 hand inversion") {
  // A = [[1,-0.5],[-0.5,1]], A^-1 = (1/0.75) [[1,0.5],[0.5,1]]
  const WeightMatrix w = pair_weights();
  const GMatrices gm = g_matrices(w, 0.5);
  Eigen::MatrixXd expected(2, 2);
  expected << 0.5, 1.0, 1.0, 0.5;
  expected /= 0.75;
  CHECK((gm.g - expected).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("g_matrices: A * A^-1 round trip") {
  const WeightMatrix w = row_standardize(build_grid_queen(5, 5));
  for (double rho : {-0.85, -0.3, 0.2, 0.85}) {
    const Eigen::MatrixXd a = build_a(w, rho);
    const GMatrices gm = g_matrices(w, rho);
    // G A = W by construction
    CHECK((gm.g * a - w.values).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("residuals: zero at y = X beta, ordinary residuals at rho=0") {
  const SemDesign design = ramp_grid_design(4, 4);
  Theta theta;
  theta.beta = Eigen::VectorXd::Constant(1, 3.5);
  theta.rho = 0.4;
  theta.sigma2 = 1.0;

  const Eigen::VectorXd y_exact = design.x * theta.beta;
  CHECK(residuals(design, y_exact, theta).cwiseAbs().maxCoeff() <= 1e-14);

  Theta theta0 = theta;
  theta0.rho = 0.0;
  Eigen::VectorXd y = y_exact;
  y(3) += 2.0;
  const Eigen::VectorXd r = residuals(design, y, theta0);
  CHECK(r(3) == doctest::Approx(2.0));
  CHECK(r.cwiseAbs().sum() == doctest::Approx(2.0));
}

TEST_CASE("simulate/residuals round trip recovers the generating draw") {
  const SemDesign design = ramp_grid_design(5, 5);
  Theta theta;
  theta.beta = Eigen::VectorXd::Constant(1, 3.5);
  theta.rho = 0.15;
  theta.sigma2 = 1.0;

  const std::uint64_t seed = 99;
  const SemSample s = simulate(design, theta, ErrorDist::Normal, seed);
  // regenerate the scaled draw independently
  Rng rng(seed);
  const Eigen::VectorXd eps = error_draw(ErrorDist::Normal, design.n, rng);
  const Eigen::VectorXd recovered = residuals(design, s.y, theta);
  CHECK((recovered - eps).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("simulate is deterministic in the seed") {
  const SemDesign design = ramp_grid_design(4, 5);
  Theta theta;
  theta.beta = Eigen::VectorXd::Constant(1, 3.5);
  theta.rho = -0.15;
  theta.sigma2 = 2.0;
  const SemSample a = simulate(design, theta, ErrorDist::StudentT5, 12345);
  const SemSample b = simulate(design, theta, ErrorDist::StudentT5, 12345);
  CHECK(a.y == b.y);  // bit identical
  const SemSample c = simulate(design, theta, ErrorDist::StudentT5, 12346);
  CHECK(a.y != c.y);
}

TEST_CASE("simulate: rho=0 normal sample variance near sigma2") {
  const SemDesign design = ramp_grid_design(10, 10);
  Theta theta;
  theta.beta = Eigen::VectorXd::Constant(1, 3.5);
  theta.rho = 0.0;
  theta.sigma2 = 1.0;
  const SemSample s = simulate(design, theta, ErrorDist::Normal, 7);
  const Eigen::VectorXd u = s.y - design.x * theta.beta;
  const double mean = u.mean();
  const double var = (u.array() - mean).square().sum() / (design.n - 1);
  CHECK(std::abs(var - 1.0) <= 3.0 / std::sqrt(static_cast<double>(design.n)));
}

TEST_CASE("error_draw: large-sample moments" * doctest::test_suite("stat")) {
  const Eigen::Index n = 100000;
  Rng rng(2024);

  const Eigen::VectorXd z = error_draw(ErrorDist::Normal, n, rng);
  CHECK(std::abs(z.mean()) <= 0.02);
  CHECK(std::abs(z.squaredNorm() / n - 1.0) <= 0.02);

  const Eigen::VectorXd t = error_draw(ErrorDist::StudentT5, n, rng);
  CHECK(std::abs(t.mean()) <= 0.03);
  CHECK(std::abs(t.squaredNorm() / n - 5.0 / 3.0) <= 0.05);

  const Eigen::VectorXd c = error_draw(ErrorDist::ChiSq4Centered, n, rng);
  CHECK(std::abs(c.mean()) <= 0.05);
  CHECK(std::abs(c.squaredNorm() / n - 8.0) <= 0.15);
  // skewness of chi2_4 is sqrt(2): mu3 / sigma^3 = 32 / 8^1.5
  const double m2 = c.squaredNorm() / n;
  const double m3 = c.array().cube().sum() / n;
  CHECK(m3 / std::pow(m2, 1.5) == doctest::Approx(std::sqrt(2.0)).epsilon(0.08));
}

TEST_CASE("simulate: mean of y matches X beta over replications" * doctest::test_suite("stat")) {
  const SemDesign design = ramp_grid_design(7, 7);
  Theta theta;
  theta.beta = Eigen::VectorXd::Constant(1, 3.5);
  theta.rho = 0.15;
  theta.sigma2 = 1.0;

  const int reps = 10000;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(design.n);
  for (int r = 0; r < reps; ++r) {
    mean += simulate(design, theta, ErrorDist::Normal, 5000 + r).y;
  }
  mean /= reps;
  // E[y_i] = 3.5 x_i; per-unit sd of the mean is about (1/(1-0.15))/sqrt(reps)
  const Eigen::VectorXd expected = design.x * theta.beta;
  CHECK((mean - expected).cwiseAbs().maxCoeff() <= 0.08);
}

TEST_CASE("make_design validates dimensions") {
  WeightMatrix w = build_grid_queen(2, 2);
  CHECK_THROWS_AS(make_design(Eigen::MatrixXd::Ones(3, 1), w), std::invalid_argument);
  CHECK_THROWS_AS(make_design(Eigen::MatrixXd::Ones(4, 2), w), std::invalid_argument);  // n <= k+2
  Theta bad;
  bad.beta = Eigen::VectorXd::Constant(1, 1.0);
  bad.rho = 1.0;
  CHECK_THROWS_AS(check_theta(bad, 1), std::invalid_argument);
  bad.rho = 0.0;
  bad.sigma2 = 0.0;
  CHECK_THROWS_AS(check_theta(bad, 1), std::invalid_argument);
}
