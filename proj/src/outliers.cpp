#include "pwscale/outliers.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "pwscale/ingest.hpp"
#include "pwscale/normal.hpp"

namespace pwscale {

double observer_loo_loglik(const std::vector<CountMatrix>& per_observer,
                           int observer, const ScaleOptions& opts) {
  const int m = static_cast<int>(per_observer.size());
  if (m < 3)
    throw DomainError("observer_loo_loglik: at least 3 observers required");
  if (observer < 0 || observer >= m)
    throw DomainError("observer_loo_loglik: observer index out of range");

  std::vector<CountMatrix> rest;
  rest.reserve(m - 1);
  for (int k = 0; k < m; ++k)
    if (k != observer) rest.push_back(per_observer[k]);
  ScaleResult consensus = scale_mle(pool_matrices(rest), opts);

  const CountMatrix& own = per_observer[observer];
  const int n = own.size();
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      int total_votes = own.pair_total(i, j);
      if (total_votes == 0) continue;
      double delta = consensus.jod[i] - consensus.jod[j];
      total += pair_log_likelihood(delta, own.counts(i, j), total_votes,
                                   opts.sigma_ij);
    }
  return total;
}

OutlierReport outlier_scores(const std::vector<CountMatrix>& per_observer,
                             const ScaleOptions& opts, int threads) {
  const int m = static_cast<int>(per_observer.size());
  if (m < 4) throw DomainError("outlier_scores: at least 4 observers required");

  OutlierReport report;
  report.log_likelihood.assign(m, 0.0);

  threads = std::max(1, threads);
  if (threads == 1) {
    for (int k = 0; k < m; ++k)
      report.log_likelihood[k] = observer_loo_loglik(per_observer, k, opts);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (;;) {
          int k = next.fetch_add(1);
          if (k >= m) return;
          report.log_likelihood[k] =
              observer_loo_loglik(per_observer, k, opts);
        }
      });
    for (auto& th : pool) th.join();
  }

  report.q1 = percentile(report.log_likelihood.data(), m, 0.25);
  report.q3 = percentile(report.log_likelihood.data(), m, 0.75);
  double iqr = report.q3 - report.q1;
  report.iqr_score.resize(m);
  report.flagged.resize(m);
  for (int k = 0; k < m; ++k) {
    double below = report.q1 - report.log_likelihood[k];
    double score;
    if (iqr > 0.0)
      score = std::max(0.0, below / iqr);
    else
      // Degenerate spread: anything strictly below Q1 is an outlier.
      score = below > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    report.iqr_score[k] = score;
    report.flagged[k] = score >= 1.5;
  }
  return report;
}

PreferenceProfile observer_preference_profile(
    const std::vector<CountMatrix>& per_observer, int observer) {
  const int m = static_cast<int>(per_observer.size());
  if (observer < 0 || observer >= m)
    throw DomainError("observer_preference_profile: observer index out of range");
  const int n = per_observer.front().size();

  auto profile_of = [n](const CountMatrix& mat) {
    Eigen::VectorXd p =
        Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
    for (int i = 0; i < n; ++i) {
      int wins = 0, total = 0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        wins += mat.counts(i, j);
        total += mat.pair_total(i, j);
      }
      if (total > 0) p[i] = static_cast<double>(wins) / total;
    }
    return p;
  };

  PreferenceProfile profile;
  profile.observer = profile_of(per_observer[observer]);
  profile.population.resize(m, n);
  for (int k = 0; k < m; ++k)
    profile.population.row(k) = profile_of(per_observer[k]).transpose();
  return profile;
}

}  // namespace pwscale
