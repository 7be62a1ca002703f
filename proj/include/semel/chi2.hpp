#pragma once

namespace semel {

/// Regularized lower incomplete gamma P(a, x), series for x < a+1 and
/// continued fraction otherwise.
double gammainc_lower(double a, double x);

double chi2_cdf(int df, double x);

/// Inverts the chi-squared CDF to relative accuracy 1e-10 with a
/// bisection-safeguarded Newton iteration. Throws std::invalid_argument
/// unless df >= 1 and alpha in (0, 1).
double chi2_quantile(int df, double alpha);

}  // namespace semel
