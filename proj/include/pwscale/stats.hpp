#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pwscale/scaling.hpp"
#include "pwscale/types.hpp"

namespace pwscale {

struct BootstrapResult {
  Eigen::MatrixXd samples;     // B x n JOD vectors, column 0 identically 0
  Eigen::VectorXd ci_low;      // 2.5th percentile per condition
  Eigen::VectorXd ci_high;     // 97.5th percentile per condition
  Eigen::VectorXd mean_jod;
  Eigen::MatrixXd covariance;  // across samples, 1/(B-1) normalization
  int B = 0;
};

struct SignificanceReport {
  double alpha = 0.05;
  Eigen::MatrixXd z_scores;
  Eigen::MatrixXd p_values;
  MatrixXb significant;
  // Pairs where the bootstrap variance is exactly 0 but the scores
  // differ; flagged instead of dividing by zero.
  MatrixXb degenerate;
};

/// Observer bootstrap: B pseudo-samples drawn by resampling observers
/// with replacement, each pooled and scaled with scale_mle. Per-sample
/// random streams are derived from (seed, sample index), so results are
/// identical across thread counts. A pseudo-sample whose pooled graph
/// cannot be scaled is redrawn, with a cap of 10*B redraws in total.
BootstrapResult bootstrap_scale(const std::vector<CountMatrix>& per_observer,
                                int B, const ScaleOptions& opts,
                                std::uint64_t seed, int threads = 1);

/// Percentile confidence intervals per condition (2.5/97.5).
std::vector<std::pair<double, double>> confidence_intervals(
    const BootstrapResult& result);

/// Variance of the difference q_i - q_j: Sigma_ii + Sigma_jj - 2 Sigma_ij.
double difference_variance(const Eigen::MatrixXd& covariance, int i, int j);

/// Two-tailed z-test on every pair of conditions.
SignificanceReport pairwise_significance(const Eigen::VectorXd& jod,
                                         const Eigen::MatrixXd& covariance,
                                         double alpha);

/// Deterministic substream seeding (splitmix64 over seed and index).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace pwscale
