#include "pwscale/normal.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "pwscale/types.hpp"

namespace pwscale {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

}  // namespace

double norm_pdf(double x) { return std::exp(-0.5 * x * x - kLogSqrt2Pi); }

double log_norm_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double log_norm_cdf(double x) {
  if (x > -1.0) {
    // erfc argument is small; no cancellation in log.
    return std::log1p(-0.5 * std::erfc(x / kSqrt2));
  }
  if (x > -36.0) {
    // erfc stays normalized down to about x = -37.
    return std::log(0.5 * std::erfc(-x / kSqrt2));
  }
  // Asymptotic expansion of the Mills ratio for the far left tail.
  double inv2 = 1.0 / (x * x);
  return -0.5 * x * x - std::log(-x) - kLogSqrt2Pi +
         std::log1p(-inv2 + 3.0 * inv2 * inv2);
}

double norm_ppf(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw DomainError("norm_ppf: probability must lie in (0, 1)");

  // Acklam's rational approximation, then one Halley refinement.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;

  double x;
  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  double e = norm_cdf(x) - p;
  double u = e / norm_pdf(x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

double norm_hazard(double x) {
  return std::exp(log_norm_pdf(x) - log_norm_cdf(x));
}

double log_binom(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double percentile(const double* data, int count, double p) {
  if (count < 1) throw DomainError("percentile: empty sample");
  std::vector<double> sorted(data, data + count);
  std::sort(sorted.begin(), sorted.end());
  double h = (count - 1) * p;
  int lo = static_cast<int>(std::floor(h));
  int hi = std::min(lo + 1, count - 1);
  double frac = h - lo;
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace pwscale
