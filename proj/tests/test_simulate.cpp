#include <doctest.h>

#include <cmath>
#include <random>

#include "pwscale/ingest.hpp"
#include "pwscale/simulate.hpp"

using namespace pwscale;

namespace {

Eigen::VectorXd make_q(std::initializer_list<double> values) {
  Eigen::VectorXd q(static_cast<int>(values.size()));
  int i = 0;
  for (double v : values) q[i++] = v;
  return q;
}

}  // namespace

TEST_CASE("design_pairs") {
  CHECK(design_pairs(5, Design::Complete).size() == 10);
  auto chain = design_pairs(5, Design::IncompleteChain);
  REQUIRE(chain.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(chain[i].first == i);
    CHECK(chain[i].second == i + 1);
  }
  CHECK(design_pairs(2, Design::Complete) == design_pairs(2, Design::IncompleteChain));
  CHECK_THROWS_AS(design_pairs(1, Design::Complete), DomainError);
}

TEST_CASE("simulate_trial win probabilities") {
  std::mt19937_64 rng(11);
  SUBCASE("1 JOD apart maps to 0.75") {
    int wins = 0;
    const int trials = 1000000;
    for (int t = 0; t < trials; ++t)
      if (simulate_trial(1.0, 0.0, 1.4826, std::nullopt, rng) ==
          TrialOutcome::IWins)
        ++wins;
    CHECK(static_cast<double>(wins) / trials == doctest::Approx(0.75).epsilon(0.002 / 0.75));
  }
  SUBCASE("equal scores are a coin flip") {
    int wins = 0;
    const int trials = 1000000;
    for (int t = 0; t < trials; ++t)
      if (simulate_trial(2.0, 2.0, 1.4826, std::nullopt, rng) ==
          TrialOutcome::IWins)
        ++wins;
    CHECK(static_cast<double>(wins) / trials == doctest::Approx(0.5).epsilon(0.002 / 0.5));
  }
  SUBCASE("infinite threshold always ties") {
    for (int t = 0; t < 100; ++t)
      CHECK(simulate_trial(0.0, 5.0, 1.4826,
                           std::numeric_limits<double>::infinity(),
                           rng) == TrialOutcome::Tie);
  }
}

TEST_CASE("apply_equal_split") {
  std::mt19937_64 rng(3);
  SUBCASE("even split") {
    Eigen::MatrixXi ties = Eigen::MatrixXi::Zero(2, 2);
    ties(0, 1) = 2;
    CountMatrix out = apply_equal_split(ties, CountMatrix::zero(2), rng);
    CHECK(out.counts(0, 1) == 1);
    CHECK(out.counts(1, 0) == 1);
  }
  SUBCASE("odd tie goes to a random side, totals conserved") {
    int side_a = 0;
    const int reps = 10000;
    for (int r = 0; r < reps; ++r) {
      Eigen::MatrixXi ties = Eigen::MatrixXi::Zero(2, 2);
      ties(0, 1) = 1;
      CountMatrix out = apply_equal_split(ties, CountMatrix::zero(2), rng);
      CHECK(out.counts(0, 1) + out.counts(1, 0) == 1);
      side_a += out.counts(0, 1);
    }
    CHECK(static_cast<double>(side_a) / reps == doctest::Approx(0.5).epsilon(0.05));
  }
  SUBCASE("three ties on top of decisive counts") {
    for (int r = 0; r < 10000; ++r) {
      Eigen::MatrixXi ties = Eigen::MatrixXi::Zero(2, 2);
      ties(0, 1) = 3;
      CountMatrix base = CountMatrix::zero(2);
      base.counts(0, 1) = 2;
      base.counts(1, 0) = 1;
      CountMatrix out = apply_equal_split(ties, base, rng);
      CHECK(out.counts(0, 1) + out.counts(1, 0) == 6);
    }
  }
}

TEST_CASE("simulate_experiment vote conservation") {
  SimConfig config;
  config.q_true = make_q({0, 1, 2});
  config.observers = 10;
  config.repetitions = 3;
  config.seed = 5;
  auto observers = simulate_experiment(config, 0);
  REQUIRE(observers.size() == 10);
  for (const CountMatrix& C : observers) {
    CHECK(C.counts.sum() == 9);  // 3 pairs x 3 repetitions
    for (auto [i, j] : design_pairs(3, Design::Complete))
      CHECK(C.pair_total(i, j) == 3);
  }

  SimConfig chain;
  chain.q_true = make_q({0, 1, 2, 3, 4});
  chain.design = Design::IncompleteChain;
  chain.observers = 1;
  chain.repetitions = 1;
  auto single = simulate_experiment(chain, 0);
  CHECK(single[0].counts.sum() == 4);
}

TEST_CASE("vote conservation holds with the tie model") {
  SimConfig config;
  config.q_true = make_q({0, 0.5, 1});
  config.observers = 20;
  config.repetitions = 3;
  config.tie_model = TieModel{};
  config.seed = 123;
  auto observers = simulate_experiment(config, 2);
  for (const CountMatrix& C : observers)
    for (auto [i, j] : design_pairs(3, Design::Complete))
      CHECK(C.pair_total(i, j) == 3);
}

TEST_CASE("simulate_experiment is deterministic in (seed, run)") {
  SimConfig config;
  config.q_true = make_q({0, 1, 2});
  config.observers = 5;
  config.seed = 9;
  auto a = simulate_experiment(config, 3);
  auto b = simulate_experiment(config, 3);
  auto c = simulate_experiment(config, 4);
  for (size_t k = 0; k < a.size(); ++k) CHECK(a[k].counts == b[k].counts);
  bool any_different = false;
  for (size_t k = 0; k < a.size(); ++k)
    if (a[k].counts != c[k].counts) any_different = true;
  CHECK(any_different);
}

TEST_CASE("law of large numbers: pooled p-hat approaches 0.75 at 1 JOD") {
  SimConfig config;
  config.q_true = make_q({0, 1});
  config.observers = 10000;
  config.repetitions = 1;
  config.seed = 21;
  CountMatrix pooled = pool_matrices(simulate_experiment(config, 0));
  double p = static_cast<double>(pooled.counts(1, 0)) / pooled.pair_total(0, 1);
  CHECK(p == doctest::Approx(0.75).epsilon(0.01 / 0.75));
}

TEST_CASE("effect_size") {
  SUBCASE("hand arithmetic for two runs") {
    Eigen::MatrixXd scores(2, 2);
    scores << 0, 1, 0, 3;
    // mean gap 2, sd of column 1 is sqrt(2).
    CHECK(effect_size(scores) == doctest::Approx(2.0 / std::sqrt(2.0)).epsilon(1e-12));
  }
  SUBCASE("scale invariance") {
    Eigen::MatrixXd scores(3, 3);
    scores << 0, 1.0, 2.2,
              0, 1.4, 1.9,
              0, 0.8, 2.3;
    CHECK(effect_size(scores * 2.0) == doctest::Approx(effect_size(scores)).epsilon(1e-12));
  }
  SUBCASE("degenerate zero variance") {
    Eigen::MatrixXd scores(3, 3);
    scores << 0, 1, 2, 0, 1, 2, 0, 1, 2;
    CHECK_THROWS_AS(effect_size(scores), DomainError);
  }
}

TEST_CASE("rmse") {
  Eigen::VectorXd truth = make_q({0, 1, 2});
  CHECK(rmse(truth, truth) == 0.0);
  CHECK(rmse(make_q({0, 1.5}), make_q({0, 1})) == doctest::Approx(0.5));
  CHECK(rmse(make_q({0, 2, 4}), make_q({0, 1, 2})) ==
        doctest::Approx(std::sqrt(2.5)).epsilon(1e-12));
  CHECK_THROWS_AS(rmse(make_q({0, 1}), truth), DomainError);
}

TEST_CASE("run_monte_carlo reproducibility and thread independence") {
  SimConfig config;
  config.q_true = make_q({0, 1, 2});
  config.observers = 8;
  config.repetitions = 3;
  config.runs = 24;
  config.seed = 77;
  config.ci_subsample = 4;
  config.ci_bootstrap = 30;

  SimMetrics a = run_monte_carlo(config);
  SimMetrics b = run_monte_carlo(config);
  config.threads = 4;
  SimMetrics c = run_monte_carlo(config);

  CHECK(a.run_scores == b.run_scores);
  CHECK(a.run_scores == c.run_scores);
  CHECK(a.mean_ci_size == c.mean_ci_size);
  CHECK(a.rmse == c.rmse);
  CHECK(a.runs_used + a.runs_failed == 24);
  CHECK(a.rmse >= 0.0);
  CHECK(a.mean_ci_size >= 0.0);
  CHECK(a.mean_jod[0] == 0.0);
}
