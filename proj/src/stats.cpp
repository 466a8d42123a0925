#include "pwscale/stats.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "pwscale/ingest.hpp"
#include "pwscale/normal.hpp"

namespace pwscale {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 over the combined state.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

BootstrapResult bootstrap_scale(const std::vector<CountMatrix>& per_observer,
                                int B, const ScaleOptions& opts,
                                std::uint64_t seed, int threads) {
  const int m = static_cast<int>(per_observer.size());
  if (m < 2) throw DomainError("bootstrap_scale: at least 2 observers required");
  if (B < 1) throw DomainError("bootstrap_scale: B must be >= 1");
  const int n = per_observer.front().size();
  for (const CountMatrix& mat : per_observer)
    if (mat.size() != n)
      throw DomainError("bootstrap_scale: matrices differ in dimension");

  BootstrapResult result;
  result.B = B;
  result.samples.resize(B, n);

  std::atomic<int> redraws{0};
  std::atomic<bool> failed{false};
  const int redraw_cap = 10 * B;

  auto run_sample = [&](int b) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(b)));
    std::uniform_int_distribution<int> pick(0, m - 1);
    for (;;) {
      std::vector<CountMatrix> resampled;
      resampled.reserve(m);
      for (int k = 0; k < m; ++k) resampled.push_back(per_observer[pick(rng)]);
      try {
        ScaleResult scaled = scale_mle(pool_matrices(resampled), opts);
        result.samples.row(b) = scaled.jod.transpose();
        return;
      } catch (const Error&) {
        if (++redraws > redraw_cap) {
          failed = true;
          return;
        }
      }
    }
  };

  threads = std::max(1, threads);
  if (threads == 1) {
    for (int b = 0; b < B && !failed; ++b) run_sample(b);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (;;) {
          int b = next.fetch_add(1);
          if (b >= B || failed) return;
          run_sample(b);
        }
      });
    for (auto& th : pool) th.join();
  }
  if (failed)
    throw Error("bootstrap_scale: redraw cap exceeded (" +
                std::to_string(redraw_cap) + " failed pseudo-samples)");

  result.mean_jod = result.samples.colwise().mean();
  result.ci_low.resize(n);
  result.ci_high.resize(n);
  std::vector<double> column(B);
  for (int i = 0; i < n; ++i) {
    for (int b = 0; b < B; ++b) column[b] = result.samples(b, i);
    result.ci_low[i] = percentile(column.data(), B, 0.025);
    result.ci_high[i] = percentile(column.data(), B, 0.975);
  }
  Eigen::MatrixXd centered =
      result.samples.rowwise() - result.mean_jod.transpose();
  result.covariance = (centered.transpose() * centered) / std::max(1, B - 1);
  return result;
}

std::vector<std::pair<double, double>> confidence_intervals(
    const BootstrapResult& result) {
  if (result.B < 2)
    throw DomainError("confidence_intervals: at least 2 samples required");
  std::vector<std::pair<double, double>> out;
  for (int i = 0; i < result.ci_low.size(); ++i)
    out.emplace_back(result.ci_low[i], result.ci_high[i]);
  return out;
}

double difference_variance(const Eigen::MatrixXd& covariance, int i, int j) {
  return covariance(i, i) + covariance(j, j) - 2.0 * covariance(i, j);
}

SignificanceReport pairwise_significance(const Eigen::VectorXd& jod,
                                         const Eigen::MatrixXd& covariance,
                                         double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DomainError("pairwise_significance: alpha must lie in (0, 1)");
  const int n = static_cast<int>(jod.size());
  if (covariance.rows() != n || covariance.cols() != n)
    throw DomainError("pairwise_significance: dimension mismatch");

  SignificanceReport report;
  report.alpha = alpha;
  report.z_scores = Eigen::MatrixXd::Zero(n, n);
  report.p_values = Eigen::MatrixXd::Ones(n, n);
  report.significant = MatrixXb::Constant(n, n, false);
  report.degenerate = MatrixXb::Constant(n, n, false);

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      double delta = jod[i] - jod[j];
      double v = difference_variance(covariance, i, j);
      if (v <= 0.0) {
        if (delta != 0.0) {
          report.z_scores(i, j) =
              std::copysign(std::numeric_limits<double>::infinity(), delta);
          report.p_values(i, j) = 0.0;
          report.significant(i, j) = true;
          report.degenerate(i, j) = true;
        }
        continue;
      }
      double z = delta / std::sqrt(v);
      double p = 2.0 * norm_cdf(-std::abs(z));
      report.z_scores(i, j) = z;
      report.p_values(i, j) = p;
      report.significant(i, j) = p < alpha;
    }
  return report;
}

}  // namespace pwscale
