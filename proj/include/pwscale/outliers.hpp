#pragma once

#include <vector>

#include "pwscale/scaling.hpp"
#include "pwscale/types.hpp"

namespace pwscale {

struct OutlierReport {
  std::vector<double> log_likelihood;  // per observer, leave-one-out
  std::vector<double> iqr_score;       // distance below Q1 in IQR multiples
  std::vector<bool> flagged;           // iqr_score >= 1.5, advisory only
  double q1 = 0.0;
  double q3 = 0.0;
};

/// Empirical per-condition selection probabilities for one observer and,
/// row-wise, for every observer in the sample (for box-plot rendering).
/// NaN marks conditions the observer never compared. No scaling involved.
struct PreferenceProfile {
  Eigen::VectorXd observer;    // length n
  Eigen::MatrixXd population;  // m x n, one row per observer
};

/// Log-likelihood of one observer's answers under the consensus of the
/// remaining observers (scaled leave-one-out, probabilities via the
/// probit link). Requires >= 3 observers.
double observer_loo_loglik(const std::vector<CountMatrix>& per_observer,
                           int observer, const ScaleOptions& opts);

/// Leave-one-out log-likelihoods for every observer, turned into Tukey
/// IQR scores (left side only). Requires >= 4 observers.
OutlierReport outlier_scores(const std::vector<CountMatrix>& per_observer,
                             const ScaleOptions& opts, int threads = 1);

PreferenceProfile observer_preference_profile(
    const std::vector<CountMatrix>& per_observer, int observer);

}  // namespace pwscale
