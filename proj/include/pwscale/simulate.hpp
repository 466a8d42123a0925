#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "pwscale/scaling.hpp"
#include "pwscale/types.hpp"

namespace pwscale {

enum class Design { Complete, IncompleteChain };

/// Per-observer "no preference" threshold distribution in JOD units.
struct TieModel {
  double threshold_mean = 0.7;
  double threshold_sd = 0.3;
};

struct SimConfig {
  Eigen::VectorXd q_true;  // true scores, first component 0
  Design design = Design::Complete;
  int observers = 10;
  int repetitions = 3;
  int runs = 1000;
  double sigma_ij = 1.4826;
  std::optional<TieModel> tie_model;
  bool use_prior = true;
  bool drop_unanimous = false;  // remove unanimous pairs before scaling
  double gamma = 0.1;
  std::uint64_t seed = 0;

  // Bootstrap CI estimation inside the Monte-Carlo loop: computed on a
  // subsample of runs to keep the cost tractable.
  bool compute_ci = true;
  int ci_subsample = 50;
  int ci_bootstrap = 200;

  int threads = 1;

  void validate() const;
};

struct SimMetrics {
  Eigen::VectorXd mean_jod;  // q-bar across runs
  Eigen::VectorXd bias;      // q-bar - q_true
  double effect_size = 0.0;
  double mean_ci_size = 0.0;  // NaN when CI estimation is off
  double rmse = 0.0;
  int runs_used = 0;
  int runs_failed = 0;            // scaling failures, excluded
  Eigen::MatrixXd run_scores;     // runs_used x n estimated score vectors
};

enum class TrialOutcome { IWins, JWins, Tie };

/// All unordered index pairs for the design (Complete: n(n-1)/2 pairs;
/// IncompleteChain: quality-scale neighbours only).
std::vector<std::pair<int, int>> design_pairs(int n, Design design);

/// One simulated comparison: latent difference drawn from
/// Normal(q_i - q_j, sigma_ij); a tie when |delta| < tie_threshold.
TrialOutcome simulate_trial(double q_i, double q_j, double sigma_ij,
                            std::optional<double> tie_threshold,
                            std::mt19937_64& rng);

/// Equal-split tie resolution: each tie adds half a vote to both sides;
/// an odd half-vote goes to a random side so pair totals stay exact.
CountMatrix apply_equal_split(const Eigen::MatrixXi& tie_counts,
                              CountMatrix counts, std::mt19937_64& rng);

/// One simulated experiment: per-observer count matrices, deterministic
/// given (config.seed, run_index). Tie thresholds are drawn once per
/// observer, truncated at 0.
std::vector<CountMatrix> simulate_experiment(const SimConfig& config,
                                             int run_index);

/// Scale every simulated experiment and aggregate bias, effect size,
/// RMSE, and mean bootstrap CI size. Deterministic given the seed.
SimMetrics run_monte_carlo(const SimConfig& config);

/// Effect size d: mean adjacent score gap over the estimation-error
/// standard deviation. The anchor has zero variance, so each gap is
/// normalized by the higher-indexed condition's standard deviation.
double effect_size(const Eigen::MatrixXd& run_scores);

/// RMSE over non-anchor conditions.
double rmse(const Eigen::VectorXd& q_hat, const Eigen::VectorXd& q_true);

}  // namespace pwscale
