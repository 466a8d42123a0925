#pragma once

#include <vector>

#include "pwscale/types.hpp"

namespace pwscale {

struct ScaleOptions {
  double sigma_ij = 1.4826;  // maps p = 0.75 to a distance of 1 JOD
  bool use_prior = true;
  double gamma = 0.1;
  double tolerance = 1e-9;       // relative change of the log-posterior
  double grad_tolerance = 1e-6;  // inf-norm of the gradient
  int max_iterations = 10000;
};

struct ScaleResult {
  Eigen::VectorXd jod;  // q-hat, first component anchored at 0
  double log_posterior = 0.0;
  bool converged = false;
};

/// p-hat(i, j) = c_ij / (c_ij + c_ji); NaN marks pairs with no data and
/// the diagonal.
Eigen::MatrixXd empirical_probabilities(const CountMatrix& C);

/// sigma_ij * Phi^-1(p). Throws DomainError unless 0 < p < 1.
double prob_to_jod(double p, double sigma_ij);

/// Distance matrix d_ij = sigma_ij * Phi^-1(p-hat_ij). Unanimous pairs
/// map to +-inf, absent pairs to NaN.
Eigen::MatrixXd distance_matrix(const CountMatrix& C, const ScaleOptions& opts);

/// Least-squares fit of scores to a distance matrix, anchored at q1 = 0.
/// Fails on +-inf entries (unanimous answers) and disconnected graphs.
ScaleResult scale_least_squares(const Eigen::MatrixXd& D);

/// log of the binomial pair likelihood at score difference delta, with
/// success probability Phi(delta / sigma_ij). Finite for every finite
/// delta, including unanimous counts.
double pair_log_likelihood(double delta, int c, int n, double sigma_ij);

/// Sum of pair log-likelihoods over all compared unordered pairs.
double total_log_likelihood(const Eigen::VectorXd& q, const CountMatrix& C,
                            const ScaleOptions& opts);

/// Analytic gradient of total_log_likelihood. Component 0 is reported
/// but ignored by the optimizer (anchor).
Eigen::VectorXd log_likelihood_gradient(const Eigen::VectorXd& q,
                                        const CountMatrix& C,
                                        const ScaleOptions& opts);

/// Nearest non-unanimous count: n -> n-1, 0 -> 1 (for n >= 2); other
/// counts pass through, as does the degenerate n = 1 case.
int desaturate_count(int c, int n);

/// Finite-distance prior: mean over compared pairs of the pair
/// likelihood at distance z, with unanimous counts desaturated.
double prior_density(double z, const CountMatrix& C, const ScaleOptions& opts);

/// Maximum-likelihood (or maximum-posterior, with the prior) scaling.
/// Requires a connected comparison graph. Deterministic.
ScaleResult scale_mle(const CountMatrix& C, const ScaleOptions& opts = {});

/// Connected components of the comparison graph (pairs with any votes).
std::vector<std::vector<int>> comparison_components(const CountMatrix& C);

/// Copy of C with unanimous pairs removed from the comparison graph
/// (both counts zeroed).
CountMatrix drop_unanimous(const CountMatrix& C);

}  // namespace pwscale
