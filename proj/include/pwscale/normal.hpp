#pragma once

// Standard Normal helpers with stable log-CDF tails. The scaling
// objective evaluates log Phi at arguments up to +-30 sigma and beyond,
// where log(Phi(x)) computed naively is -inf.

namespace pwscale {

/// Standard Normal density.
double norm_pdf(double x);

/// log of the standard Normal density.
double log_norm_pdf(double x);

/// Standard Normal CDF Phi(x).
double norm_cdf(double x);

/// log Phi(x), finite for all finite x (asymptotic expansion in the far
/// left tail where erfc underflows).
double log_norm_cdf(double x);

/// Inverse CDF Phi^-1(p). Throws pwscale::DomainError unless 0 < p < 1.
double norm_ppf(double p);

/// phi(x) / Phi(x), evaluated in log space so the ratio stays finite in
/// the left tail.
double norm_hazard(double x);

/// log of the binomial coefficient C(n, k).
double log_binom(int n, int k);

/// Linear-interpolation percentile (quartile "type 7" rule) of a sample;
/// p in [0, 1]. The input is copied and sorted.
double percentile(const double* data, int count, double p);

}  // namespace pwscale
