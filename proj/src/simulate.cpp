#include "pwscale/simulate.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "pwscale/ingest.hpp"
#include "pwscale/stats.hpp"

namespace pwscale {

void SimConfig::validate() const {
  if (q_true.size() < 2) throw DomainError("SimConfig: need at least 2 conditions");
  if (q_true[0] != 0.0) throw DomainError("SimConfig: q_true[0] must be 0");
  if (observers < 1) throw DomainError("SimConfig: observers must be >= 1");
  if (repetitions < 1) throw DomainError("SimConfig: repetitions must be >= 1");
  if (runs < 1) throw DomainError("SimConfig: runs must be >= 1");
  if (sigma_ij <= 0.0) throw DomainError("SimConfig: sigma_ij must be > 0");
}

std::vector<std::pair<int, int>> design_pairs(int n, Design design) {
  if (n < 2) throw DomainError("design_pairs: n must be >= 2");
  std::vector<std::pair<int, int>> pairs;
  if (design == Design::Complete) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  } else {
    for (int i = 0; i + 1 < n; ++i) pairs.emplace_back(i, i + 1);
  }
  return pairs;
}

TrialOutcome simulate_trial(double q_i, double q_j, double sigma_ij,
                            std::optional<double> tie_threshold,
                            std::mt19937_64& rng) {
  if (sigma_ij <= 0.0) throw DomainError("simulate_trial: sigma_ij must be > 0");
  std::normal_distribution<double> noise(q_i - q_j, sigma_ij);
  double delta = noise(rng);
  if (tie_threshold && std::abs(delta) < *tie_threshold) return TrialOutcome::Tie;
  return delta > 0.0 ? TrialOutcome::IWins : TrialOutcome::JWins;
}

CountMatrix apply_equal_split(const Eigen::MatrixXi& tie_counts,
                              CountMatrix counts, std::mt19937_64& rng) {
  const int n = counts.size();
  std::uniform_int_distribution<int> coin(0, 1);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      int ties = tie_counts(i, j) + tie_counts(j, i);
      if (ties < 0) throw DomainError("apply_equal_split: negative tally");
      if (ties == 0) continue;
      counts.counts(i, j) += ties / 2;
      counts.counts(j, i) += ties / 2;
      if (ties % 2 == 1) {
        if (coin(rng) == 0)
          counts.counts(i, j) += 1;
        else
          counts.counts(j, i) += 1;
      }
    }
  return counts;
}

std::vector<CountMatrix> simulate_experiment(const SimConfig& config,
                                             int run_index) {
  config.validate();
  const int n = static_cast<int>(config.q_true.size());
  auto pairs = design_pairs(n, config.design);
  std::mt19937_64 rng(
      mix_seed(config.seed, 0x5a11ce00ULL + static_cast<std::uint64_t>(run_index)));

  std::vector<CountMatrix> observers;
  observers.reserve(config.observers);
  for (int obs = 0; obs < config.observers; ++obs) {
    std::optional<double> threshold;
    if (config.tie_model) {
      std::normal_distribution<double> thr(config.tie_model->threshold_mean,
                                           config.tie_model->threshold_sd);
      threshold = std::max(0.0, thr(rng));
    }
    CountMatrix counts = CountMatrix::zero(n);
    Eigen::MatrixXi ties = Eigen::MatrixXi::Zero(n, n);
    for (int rep = 0; rep < config.repetitions; ++rep)
      for (auto [i, j] : pairs) {
        TrialOutcome outcome = simulate_trial(
            config.q_true[i], config.q_true[j], config.sigma_ij, threshold, rng);
        if (outcome == TrialOutcome::IWins)
          counts.counts(i, j) += 1;
        else if (outcome == TrialOutcome::JWins)
          counts.counts(j, i) += 1;
        else
          ties(i, j) += 1;
      }
    observers.push_back(apply_equal_split(ties, std::move(counts), rng));
  }
  return observers;
}

SimMetrics run_monte_carlo(const SimConfig& config) {
  config.validate();
  const int n = static_cast<int>(config.q_true.size());
  ScaleOptions opts;
  opts.sigma_ij = config.sigma_ij;
  opts.use_prior = config.use_prior;
  opts.gamma = config.gamma;

  Eigen::MatrixXd scores(config.runs, n);
  std::vector<char> ok(config.runs, 0);
  // Per-run experiments kept only for the CI subsample.
  const int ci_runs =
      config.compute_ci ? std::min(config.ci_subsample, config.runs) : 0;
  std::vector<double> ci_sizes(ci_runs, std::numeric_limits<double>::quiet_NaN());

  auto run_one = [&](int r) {
    auto per_observer = simulate_experiment(config, r);
    CountMatrix pooled = pool_matrices(per_observer);
    if (config.drop_unanimous) pooled = drop_unanimous(pooled);
    try {
      ScaleResult result = scale_mle(pooled, opts);
      scores.row(r) = result.jod.transpose();
      ok[r] = 1;
    } catch (const Error&) {
      return;
    }
    if (r < ci_runs && per_observer.size() >= 2) {
      try {
        BootstrapResult boot = bootstrap_scale(
            per_observer, config.ci_bootstrap, opts,
            mix_seed(config.seed, 0xb007ULL + static_cast<std::uint64_t>(r)));
        // Mean half-width over the non-anchor conditions.
        double size = 0.0;
        for (int i = 1; i < n; ++i)
          size += 0.5 * (boot.ci_high[i] - boot.ci_low[i]);
        ci_sizes[r] = size / (n - 1);
      } catch (const Error&) {
      }
    }
  };

  int threads = std::max(1, config.threads);
  if (threads == 1) {
    for (int r = 0; r < config.runs; ++r) run_one(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (;;) {
          int r = next.fetch_add(1);
          if (r >= config.runs) return;
          run_one(r);
        }
      });
    for (auto& th : pool) th.join();
  }

  SimMetrics metrics;
  metrics.runs_used = 0;
  for (int r = 0; r < config.runs; ++r) metrics.runs_used += ok[r];
  metrics.runs_failed = config.runs - metrics.runs_used;
  if (metrics.runs_used == 0)
    throw Error("run_monte_carlo: every run failed to scale");

  metrics.run_scores.resize(metrics.runs_used, n);
  int row = 0;
  for (int r = 0; r < config.runs; ++r)
    if (ok[r]) metrics.run_scores.row(row++) = scores.row(r);

  metrics.mean_jod = metrics.run_scores.colwise().mean();
  metrics.bias = metrics.mean_jod - config.q_true;

  // RMSE pooled across runs and non-anchor conditions.
  double ss = 0.0;
  for (int r = 0; r < metrics.runs_used; ++r)
    for (int i = 1; i < n; ++i) {
      double e = metrics.run_scores(r, i) - config.q_true[i];
      ss += e * e;
    }
  metrics.rmse = std::sqrt(ss / (static_cast<double>(metrics.runs_used) * (n - 1)));

  metrics.effect_size = metrics.runs_used >= 2
                            ? effect_size(metrics.run_scores)
                            : std::numeric_limits<double>::quiet_NaN();

  if (ci_runs > 0) {
    double sum = 0.0;
    int count = 0;
    for (double s : ci_sizes)
      if (!std::isnan(s)) {
        sum += s;
        ++count;
      }
    metrics.mean_ci_size =
        count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
  } else {
    metrics.mean_ci_size = std::numeric_limits<double>::quiet_NaN();
  }
  return metrics;
}

double effect_size(const Eigen::MatrixXd& run_scores) {
  const int runs = static_cast<int>(run_scores.rows());
  const int n = static_cast<int>(run_scores.cols());
  if (runs < 2) throw DomainError("effect_size: at least 2 runs required");
  if (n < 2) throw DomainError("effect_size: at least 2 conditions required");

  Eigen::VectorXd mean = run_scores.colwise().mean();
  Eigen::VectorXd sd(n);
  for (int i = 0; i < n; ++i) {
    double ss = (run_scores.col(i).array() - mean[i]).square().sum();
    sd[i] = std::sqrt(ss / (runs - 1));
  }
  double d = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    // The anchor has zero variance; normalize each gap by the
    // higher-indexed condition's standard deviation.
    if (sd[i + 1] <= 0.0)
      throw DomainError("effect_size: zero variance (degenerate simulation)");
    d += (mean[i + 1] - mean[i]) / sd[i + 1];
  }
  return d / (n - 1);
}

double rmse(const Eigen::VectorXd& q_hat, const Eigen::VectorXd& q_true) {
  if (q_hat.size() != q_true.size())
    throw DomainError("rmse: length mismatch");
  const int n = static_cast<int>(q_hat.size());
  if (n < 2) throw DomainError("rmse: at least 2 conditions required");
  double ss = 0.0;
  for (int i = 1; i < n; ++i) {
    double e = q_true[i] - q_hat[i];
    ss += e * e;
  }
  return std::sqrt(ss / (n - 1));
}

}  // namespace pwscale
