// Acceptance suite: one pass/fail line per criterion. Exits non-zero on
// any failure. Heavy Monte-Carlo criteria run multi-threaded.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pwscale/ingest.hpp"
#include "pwscale/normal.hpp"
#include "pwscale/outliers.hpp"
#include "pwscale/simulate.hpp"
#include "pwscale/stats.hpp"

using namespace pwscale;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int criterion, const std::string& name, bool ok,
            const std::string& detail = "") {
  std::printf("criterion %2d: %s — %s%s%s\n", criterion, ok ? "PASS" : "FAIL",
              name.c_str(), detail.empty() ? "" : " — ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

int hw_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 4 : static_cast<int>(n);
}

CountMatrix toy_matrix() {
  CountMatrix C = CountMatrix::zero(3);
  C.counts << 0, 3, 0, 27, 0, 7, 30, 23, 0;
  return C;
}

Eigen::VectorXd make_q(std::initializer_list<double> values) {
  Eigen::VectorXd q(static_cast<int>(values.size()));
  int i = 0;
  for (double v : values) q[i++] = v;
  return q;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// ---------------------------------------------------------------------

void criterion_1_jod_calibration() {
  double one = prob_to_jod(0.75, 1.4826);
  double two = prob_to_jod(0.91, 1.4826);
  // The quoted probability 0.91 is a rounded value (2 JOD maps to
  // 0.9113 exactly), so the inverse sits at 1.9878, not 2.00.
  bool ok = std::abs(one - 1.0) < 1e-3 && std::abs(two - 2.0) < 0.015;
  report(1, "JOD calibration (0.75 -> 1, 0.91 -> 2)", ok,
         "got " + fmt(one) + ", " + fmt(two));
}

void criterion_2_toy_matrix() {
  ScaleOptions opts;
  Eigen::MatrixXd D = distance_matrix(toy_matrix(), opts);
  bool distances = std::abs(D(2, 1) - 1.0792) < 1e-3 &&
                   std::isinf(D(2, 0)) && D(2, 0) > 0 &&
                   std::isinf(D(0, 2)) && D(0, 2) < 0;
  ScaleResult r = scale_mle(toy_matrix(), opts);
  bool scores = r.jod.allFinite() && r.jod[0] == 0.0 && r.jod[1] > r.jod[0] &&
                r.jod[2] > r.jod[1];
  report(2, "toy matrix distances and prior MLE", distances && scores,
         "d32=" + fmt(D(2, 1)) + " q=" + fmt(r.jod[1]) + "," + fmt(r.jod[2]));
}

void criterion_3_closed_form() {
  ScaleOptions opts;
  opts.use_prior = false;
  double worst = 0.0;
  for (int n = 2; n <= 50; ++n)
    for (int c = 1; c < n; ++c) {
      CountMatrix C = CountMatrix::zero(2);
      C.counts(1, 0) = c;
      C.counts(0, 1) = n - c;
      double expected = prob_to_jod(static_cast<double>(c) / n, opts.sigma_ij);
      double got = scale_mle(C, opts).jod[1];
      worst = std::max(worst, std::abs(got - expected));
    }
  report(3, "closed-form oracle, exhaustive (c, n) sweep n <= 50",
         worst < 1e-4, "max abs deviation " + fmt(worst));
}

void criterion_4_gradient() {
  ScaleOptions opts;
  opts.use_prior = false;
  std::mt19937 rng(4242);
  std::uniform_int_distribution<int> dim(2, 6), votes(0, 50);
  std::uniform_real_distribution<double> score(-3.0, 3.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    int n = dim(rng);
    CountMatrix C = CountMatrix::zero(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) C.counts(i, j) = votes(rng);
    Eigen::VectorXd q(n);
    q[0] = 0.0;
    for (int i = 1; i < n; ++i) q[i] = score(rng);
    Eigen::VectorXd g = log_likelihood_gradient(q, C, opts);
    const double h = 1e-5;
    for (int k = 0; k < n; ++k) {
      Eigen::VectorXd up = q, down = q;
      up[k] += h;
      down[k] -= h;
      double fd = (total_log_likelihood(up, C, opts) -
                   total_log_likelihood(down, C, opts)) /
                  (2.0 * h);
      worst = std::max(worst, std::abs(g[k] - fd) / std::max(1.0, std::abs(fd)));
    }
  }
  report(4, "analytic gradient vs central differences (100 instances)",
         worst < 1e-5, "max relative deviation " + fmt(worst));
}

void criterion_5_prior_bias() {
  SimConfig base;
  base.q_true = make_q({0, 2, 4, 6, 8, 10});
  base.observers = 10;
  base.repetitions = 3;
  base.runs = 1000;
  base.seed = 501;
  base.compute_ci = false;
  base.threads = hw_threads();

  SimConfig off = base;
  off.use_prior = false;
  SimConfig on = base;
  on.use_prior = true;
  SimConfig dropped = base;
  dropped.use_prior = false;
  dropped.drop_unanimous = true;

  SimMetrics m_off = run_monte_carlo(off);
  SimMetrics m_on = run_monte_carlo(on);
  SimMetrics m_drop = run_monte_carlo(dropped);

  bool ok = true;
  std::string detail;
  for (int i = 1; i < 6; ++i) {
    bool positive_off = m_off.bias[i] > 0.0;
    bool smaller_on = std::abs(m_on.bias[i]) < std::abs(m_off.bias[i]);
    bool negative_drop = m_drop.bias[i] < 0.0;
    ok = ok && positive_off && smaller_on && negative_drop;
  }
  detail = "bias off/on/drop at top condition: " + fmt(m_off.bias[5]) + "/" +
           fmt(m_on.bias[5]) + "/" + fmt(m_drop.bias[5]) +
           " (dropped-run exclusions: " + std::to_string(m_drop.runs_failed) + ")";
  report(5, "prior reduces the unanimous-answer bias", ok, detail);
}

// Shared state between criteria 6 and 8.
struct CoverageResult {
  double coverage = 0.0;
  Eigen::VectorXd mean_ci_width;
};

CoverageResult run_coverage() {
  SimConfig config;
  config.q_true = make_q({0, 1, 2, 3, 4});
  config.observers = 20;
  config.repetitions = 3;
  config.seed = 606;
  const int experiments = 200;
  const int B = 500;
  const int n = 5;

  std::atomic<int> covered{0}, total{0};
  Eigen::MatrixXd widths = Eigen::MatrixXd::Zero(experiments, n);

  std::atomic<int> next{0};
  auto worker = [&] {
    ScaleOptions opts;
    for (;;) {
      int r = next.fetch_add(1);
      if (r >= experiments) return;
      auto observers = simulate_experiment(config, r);
      BootstrapResult boot = bootstrap_scale(
          observers, B, opts, mix_seed(config.seed, 10000 + r), 1);
      for (int i = 1; i < n; ++i) {
        if (boot.ci_low[i] <= config.q_true[i] &&
            config.q_true[i] <= boot.ci_high[i])
          ++covered;
        ++total;
        widths(r, i) = boot.ci_high[i] - boot.ci_low[i];
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < hw_threads(); ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  CoverageResult result;
  result.coverage = static_cast<double>(covered) / total;
  result.mean_ci_width = widths.colwise().mean();
  return result;
}

void criterion_6_and_8(const CoverageResult& cov) {
  bool ok6 = cov.coverage >= 0.90 && cov.coverage <= 0.98;
  report(6, "bootstrap 95% CI coverage in [0.90, 0.98]", ok6,
         "coverage " + fmt(cov.coverage));

  bool ok8 = true;
  std::string widths;
  for (int i = 1; i < cov.mean_ci_width.size(); ++i) {
    if (i > 1 && cov.mean_ci_width[i] < cov.mean_ci_width[i - 1]) ok8 = false;
    widths += (i > 1 ? "," : "") + fmt(cov.mean_ci_width[i]);
  }
  report(8, "CI size non-decreasing with distance from the anchor", ok8,
         "mean widths " + widths);
}

void criterion_7_difference_variance() {
  Eigen::MatrixXd sigma(3, 3);
  sigma << 0, 0, 0, 0, 0.431, 0.486, 0, 0.486, 0.683;
  double v = difference_variance(sigma, 1, 2);
  report(7, "difference variance from the published covariance",
         std::abs(v - 0.142) < 1e-12, "v23 = " + fmt(v));
}

void criterion_9_ties_bias() {
  SimConfig config;
  config.q_true = make_q({0, 1, 2, 3, 4});
  config.observers = 20;
  config.repetitions = 3;
  config.runs = 500;
  config.seed = 909;
  config.tie_model = TieModel{0.7, 0.3};
  config.compute_ci = false;
  config.threads = hw_threads();
  SimMetrics metrics = run_monte_carlo(config);
  bool ok = true;
  for (int i = 1; i < 5; ++i) ok = ok && metrics.bias[i] < 0.0;
  report(9, "equal-split ties under-estimate the scale", ok,
         "bias " + fmt(metrics.bias[1]) + ".." + fmt(metrics.bias[4]));
}

void criterion_10_incomplete_efficiency() {
  // Matched effort: complete design 10 pairs x 10 observers = chain
  // design 4 pairs x 25 observers.
  SimConfig complete;
  complete.q_true = make_q({0, 1, 2, 3, 4});
  complete.observers = 10;
  complete.repetitions = 3;
  complete.runs = 500;
  complete.seed = 1010;
  complete.compute_ci = false;
  complete.threads = hw_threads();

  SimConfig chain = complete;
  chain.design = Design::IncompleteChain;
  chain.observers = 25;

  SimMetrics m_complete = run_monte_carlo(complete);
  SimMetrics m_chain = run_monte_carlo(chain);
  bool ok = m_chain.rmse <= 1.2 * m_complete.rmse;
  report(10, "incomplete chain efficiency at matched comparison counts", ok,
         "rmse chain/complete = " + fmt(m_chain.rmse) + "/" +
             fmt(m_complete.rmse));
}

void criterion_11_outlier_power() {
  SimConfig config;
  config.q_true = make_q({0, 1, 2, 3});
  config.observers = 19;
  config.repetitions = 3;
  config.seed = 1111;

  std::atomic<int> flagged{0};
  std::atomic<int> next{0};
  const int datasets = 100;
  auto worker = [&] {
    ScaleOptions opts;
    for (;;) {
      int d = next.fetch_add(1);
      if (d >= datasets) return;
      auto observers = simulate_experiment(config, d);
      // Inject a uniform-random responder.
      std::mt19937_64 rng(mix_seed(9999, d));
      std::uniform_int_distribution<int> coin(0, 1);
      CountMatrix random_responder = CountMatrix::zero(4);
      for (auto [i, j] : design_pairs(4, Design::Complete))
        for (int rep = 0; rep < 3; ++rep) {
          if (coin(rng) == 0)
            random_responder.counts(i, j) += 1;
          else
            random_responder.counts(j, i) += 1;
        }
      observers.push_back(random_responder);
      OutlierReport report = outlier_scores(observers, opts);
      int argmax = 0;
      for (size_t k = 1; k < report.iqr_score.size(); ++k)
        if (report.iqr_score[k] > report.iqr_score[argmax])
          argmax = static_cast<int>(k);
      if (report.flagged[19] && argmax == 19) ++flagged;
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < hw_threads(); ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  bool ok = flagged >= 80;
  report(11, "random responder flagged in >= 80 of 100 datasets", ok,
         std::to_string(flagged.load()) + " flagged");
}

// --------------------------- criterion 12 -----------------------------

std::string toy_csv() {
  // Trials realizing the toy matrix counts, spread over 6 observers
  // (5 votes per observer per pair).
  std::ostringstream csv;
  csv << "observer,session,scene,condition_1,condition_2,selection\n";
  auto emit_pair = [&](const std::string& a, const std::string& b,
                       int a_wins, int b_wins) {
    int obs = 0, in_obs = 0;
    auto next_obs = [&] {
      if (++in_obs == 5) {
        in_obs = 0;
        ++obs;
      }
    };
    for (int k = 0; k < a_wins; ++k) {
      csv << "obs" << obs << ",1,scene," << a << ',' << b << ",1\n";
      next_obs();
    }
    for (int k = 0; k < b_wins; ++k) {
      csv << "obs" << obs << ",1,scene," << a << ',' << b << ",2\n";
      next_obs();
    }
  };
  emit_pair("A", "B", 3, 27);
  emit_pair("A", "C", 0, 30);
  emit_pair("B", "C", 7, 23);
  return csv.str();
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(PWSCALE_CLI_PATH) + " " + args;
  return std::system(cmd.c_str());
}

void criterion_12_determinism() {
  fs::path dir = fs::temp_directory_path() / "pwscale_acceptance";
  fs::create_directories(dir);
  fs::path input = dir / "toy.csv";
  {
    std::ofstream out(input, std::ios::binary);
    out << toy_csv();
  }
  int max_threads = hw_threads();

  bool ok = true;
  std::string detail;
  auto expect_same = [&](const std::string& what, const fs::path& a,
                         const fs::path& b) {
    std::string ca = slurp(a), cb = slurp(b);
    if (ca.empty() || ca != cb) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + what + " differs";
    }
  };

  fs::path s1 = dir / "scale1.json", s2 = dir / "scale2.json",
           s3 = dir / "scale3.json";
  std::string scale_flags = " scale --input " + input.string() +
                            " --seed 7 --bootstrap 100 --output ";
  int rc = 0;
  rc |= run_cli(scale_flags + s1.string() + " --threads 1");
  rc |= run_cli(scale_flags + s2.string() + " --threads 1");
  rc |= run_cli(scale_flags + s3.string() + " --threads " +
                std::to_string(max_threads));
  expect_same("scale rerun", s1, s2);
  expect_same("scale thread count", s1, s3);

  fs::path c1 = dir / "sim1.csv", c2 = dir / "sim2.csv", c3 = dir / "sim3.csv";
  std::string sim_flags =
      " simulate --q 0,1,2 --observers 6 --runs 30 --seed 3 "
      "--ci-subsample 5 --output ";
  rc |= run_cli(sim_flags + c1.string() + " --threads 1");
  rc |= run_cli(sim_flags + c2.string() + " --threads 1");
  rc |= run_cli(sim_flags + c3.string() + " --threads " +
                std::to_string(max_threads));
  expect_same("simulate rerun", c1, c2);
  expect_same("simulate thread count", c1, c3);

  if (rc != 0) {
    ok = false;
    detail += (detail.empty() ? "" : "; ") + std::string("non-zero exit code");
  }
  report(12, "seeded commands are byte-identical across runs and threads",
         ok, detail);
}

}  // namespace

int main() {
  criterion_1_jod_calibration();
  criterion_2_toy_matrix();
  criterion_3_closed_form();
  criterion_4_gradient();
  criterion_7_difference_variance();
  criterion_12_determinism();
  criterion_5_prior_bias();
  CoverageResult cov = run_coverage();
  criterion_6_and_8(cov);
  criterion_9_ties_bias();
  criterion_10_incomplete_efficiency();
  criterion_11_outlier_power();

  if (failures == 0) {
    std::printf("all acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d acceptance criteria FAILED\n", failures);
  return 1;
}
