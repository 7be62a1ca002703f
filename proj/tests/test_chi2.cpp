#include <doctest.h>

#include <cmath>

#include "semel/chi2.hpp"

using namespace semel;

namespace {

// Independent closed-form CDFs for small df, used as oracles for the
// incomplete-gamma inversion.
double chi2_cdf_df2(double x) { return 1.0 - std::exp(-0.5 * x); }

double chi2_cdf_df3(double x) {
  return std::erf(std::sqrt(0.5 * x)) - std::sqrt(2.0 * x / M_PI) * std::exp(-0.5 * x);
}

double bisect(double (*cdf)(double), double alpha, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < alpha ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("chi2_quantile: df=2 closed form") {
  // chi2_2 is exponential: z = -2 log(1 - alpha)
  CHECK(chi2_quantile(2, 0.95) == doctest::Approx(-2.0 * std::log(0.05)).epsilon(1e-10));
  CHECK(chi2_quantile(2, 0.5) == doctest::Approx(-2.0 * std::log(0.5)).epsilon(1e-10));
}

TEST_CASE("chi2_quantile: df=3 against independent erf-based oracle") {
  const double oracle = bisect(chi2_cdf_df3, 0.95, 0.0, 50.0);
  CHECK(oracle == doctest::Approx(7.8147).epsilon(1e-4));
  CHECK(chi2_quantile(3, 0.95) == doctest::Approx(oracle).epsilon(1e-9));
  const double oracle90 = bisect(chi2_cdf_df3, 0.9, 0.0, 50.0);
  CHECK(chi2_quantile(3, 0.9) == doctest::Approx(oracle90).epsilon(1e-9));
}

TEST_CASE("chi2_quantile: df=1 at the two-sided 1-sigma level") {
  CHECK(chi2_quantile(1, 0.6826894921370859) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("chi2_cdf and chi2_quantile are inverse") {
  for (int df : {1, 2, 3, 5, 10, 40}) {
    for (double alpha : {0.01, 0.1, 0.5, 0.9, 0.95, 0.999}) {
      const double z = chi2_quantile(df, alpha);
      CHECK(chi2_cdf(df, z) == doctest::Approx(alpha).epsilon(1e-9));
    }
  }
}

TEST_CASE("chi2_cdf agrees with closed forms") {
  for (double x : {0.1, 1.0, 3.0, 7.0, 20.0}) {
    CHECK(chi2_cdf(2, x) == doctest::Approx(chi2_cdf_df2(x)).epsilon(1e-12));
    CHECK(chi2_cdf(3, x) == doctest::Approx(chi2_cdf_df3(x)).epsilon(1e-12));
  }
}

TEST_CASE("chi2_quantile rejects bad arguments") {
  CHECK_THROWS_AS(chi2_quantile(3, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(chi2_quantile(3, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(chi2_quantile(3, -0.2), std::invalid_argument);
  CHECK_THROWS_AS(chi2_quantile(0, 0.5), std::invalid_argument);
}
