#include "semel/chi2.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace semel {

namespace {

constexpr int kMaxTerms = 500;
constexpr double kEps = 1e-16;

// Series expansion of P(a, x), converges fast for x < a + 1.
double gamma_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < kMaxTerms; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q(a, x), converges fast for x >= a + 1.
double gamma_cont_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxTerms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double chi2_pdf(int df, double x) {
  const double a = 0.5 * df;
  if (x <= 0.0) return 0.0;
  return std::exp((a - 1.0) * std::log(x) - 0.5 * x - std::lgamma(a) - a * std::log(2.0));
}

}  // namespace

double gammainc_lower(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gammainc_lower: need a > 0, x >= 0");
  if (x == 0.0) return 0.0;
  return x < a + 1.0 ? gamma_series(a, x) : 1.0 - gamma_cont_fraction(a, x);
}

double chi2_cdf(int df, double x) {
  if (df < 1) throw std::invalid_argument("chi2_cdf: df must be >= 1");
  if (x <= 0.0) return 0.0;
  return gammainc_lower(0.5 * df, 0.5 * x);
}

double chi2_quantile(int df, double alpha) {
  if (df < 1) throw std::invalid_argument("chi2_quantile: df must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("chi2_quantile: alpha must lie in (0, 1), got " +
                                std::to_string(alpha));
  }

  double lo = 0.0;
  double hi = df + 10.0 * std::sqrt(2.0 * df) + 10.0;
  while (chi2_cdf(df, hi) < alpha && hi < 1e12) {
    lo = hi;
    hi *= 2.0;
  }

  // Newton with bisection safeguard on the bracketing interval.
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 200; ++i) {
    const double f = chi2_cdf(df, x) - alpha;
    if (f > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    const double dens = chi2_pdf(df, x);
    double next;
    if (dens > 0.0) {
      next = x - f / dens;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    } else {
      next = 0.5 * (lo + hi);
    }
    const double step = std::abs(next - x);
    x = next;
    if (step <= 1e-12 * std::max(x, 1.0) && hi - lo <= 1e-10 * std::max(x, 1.0)) break;
  }
  return x;
}

}  // namespace semel
