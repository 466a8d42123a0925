#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pwscale/normal.hpp"
#include "pwscale/outliers.hpp"

using namespace pwscale;

namespace {

// 3 conditions; conforming observers agree that 2 > 1 > 0 with roughly
// 0.9 preference per comparison (9 of 10 votes).
CountMatrix conforming() {
  CountMatrix C = CountMatrix::zero(3);
  C.counts(1, 0) = 9; C.counts(0, 1) = 1;
  C.counts(2, 1) = 9; C.counts(1, 2) = 1;
  C.counts(2, 0) = 9; C.counts(0, 2) = 1;
  return C;
}

CountMatrix contrarian() {
  CountMatrix C = CountMatrix::zero(3);
  C.counts(0, 1) = 10;
  C.counts(1, 2) = 10;
  C.counts(0, 2) = 10;
  return C;
}

}  // namespace

TEST_CASE("loo log-likelihood separates conforming from contrarian") {
  std::vector<CountMatrix> observers(7, conforming());
  observers.push_back(contrarian());
  ScaleOptions opts;

  double worst = observer_loo_loglik(observers, 7, opts);
  for (int k = 0; k < 7; ++k)
    CHECK(observer_loo_loglik(observers, k, opts) > worst);

  // A conforming observer scores near the binomial maximum of its own
  // counts: the consensus probability is close to its empirical rate.
  double conforming_ll = observer_loo_loglik(observers, 0, opts);
  double max_ll = 0.0;
  const CountMatrix& own = observers[0];
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      int n = own.pair_total(i, j);
      double p = static_cast<double>(own.counts(i, j)) / n;
      max_ll += log_binom(n, own.counts(i, j)) +
                own.counts(i, j) * std::log(p) +
                (n - own.counts(i, j)) * std::log1p(-p);
    }
  // Not exact: the consensus includes the contrarian, and the fixture's
  // pair probabilities are not perfectly consistent with one scale.
  CHECK(conforming_ll > max_ll - 5.0);
  CHECK(conforming_ll <= max_ll + 1e-9);
}

TEST_CASE("loo precondition") {
  std::vector<CountMatrix> two(2, conforming());
  CHECK_THROWS_AS(observer_loo_loglik(two, 0, ScaleOptions{}), DomainError);
}

TEST_CASE("outlier_scores flags the contrarian") {
  std::vector<CountMatrix> observers(9, conforming());
  observers.push_back(contrarian());
  OutlierReport report = outlier_scores(observers, ScaleOptions{});
  for (int k = 0; k < 9; ++k) {
    CHECK(report.iqr_score[k] < report.iqr_score[9]);
    CHECK(report.iqr_score[k] >= 0.0);
  }
  CHECK(report.flagged[9]);
  for (size_t k = 0; k < report.flagged.size(); ++k)
    CHECK(report.flagged[k] == (report.iqr_score[k] >= 1.5));
}

TEST_CASE("identical observers give all-zero scores") {
  std::vector<CountMatrix> observers(6, conforming());
  OutlierReport report = outlier_scores(observers, ScaleOptions{});
  for (double s : report.iqr_score) CHECK(s == 0.0);
  for (bool f : report.flagged) CHECK_FALSE(f);
}

TEST_CASE("outlier_scores preconditions and permutation invariance") {
  std::vector<CountMatrix> three(3, conforming());
  CHECK_THROWS_AS(outlier_scores(three, ScaleOptions{}), DomainError);

  std::vector<CountMatrix> observers(5, conforming());
  observers.push_back(contrarian());
  OutlierReport a = outlier_scores(observers, ScaleOptions{});
  std::rotate(observers.begin(), observers.begin() + 1, observers.end());
  OutlierReport b = outlier_scores(observers, ScaleOptions{});
  // Rotation permutes report rows only.
  for (size_t k = 0; k < observers.size(); ++k) {
    double lhs = a.iqr_score[k];
    double rhs = b.iqr_score[(k + observers.size() - 1) % observers.size()];
    if (std::isfinite(lhs))
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    else
      CHECK(lhs == rhs);
  }
}

TEST_CASE("outlier_scores runs identically threaded") {
  std::vector<CountMatrix> observers(7, conforming());
  observers.push_back(contrarian());
  OutlierReport a = outlier_scores(observers, ScaleOptions{}, 1);
  OutlierReport b = outlier_scores(observers, ScaleOptions{}, 4);
  CHECK(a.log_likelihood == b.log_likelihood);
}

TEST_CASE("observer_preference_profile") {
  SUBCASE("always picks one condition") {
    CountMatrix C = CountMatrix::zero(3);
    C.counts(0, 1) = 4;
    C.counts(0, 2) = 4;
    std::vector<CountMatrix> observers = {C, conforming()};
    PreferenceProfile p = observer_preference_profile(observers, 0);
    CHECK(p.observer[0] == doctest::Approx(1.0));
    CHECK(p.observer[1] == doctest::Approx(0.0));
  }
  SUBCASE("balanced wins and losses give 0.5") {
    CountMatrix C = CountMatrix::zero(2);
    C.counts(0, 1) = 3;
    C.counts(1, 0) = 3;
    std::vector<CountMatrix> observers = {C};
    PreferenceProfile p = observer_preference_profile(observers, 0);
    CHECK(p.observer[0] == doctest::Approx(0.5));
    CHECK(p.observer[1] == doctest::Approx(0.5));
  }
  SUBCASE("never-compared condition is absent") {
    CountMatrix C = CountMatrix::zero(3);
    C.counts(0, 1) = 2;
    C.counts(1, 0) = 2;
    std::vector<CountMatrix> observers = {C, conforming()};
    PreferenceProfile p = observer_preference_profile(observers, 0);
    CHECK(std::isnan(p.observer[2]));
  }
  SUBCASE("population mean matches the pooled statistic on balanced data") {
    // Every observer compares every pair the same number of times.
    std::vector<CountMatrix> observers(4, conforming());
    observers.push_back(contrarian());
    PreferenceProfile p = observer_preference_profile(observers, 0);
    for (int i = 0; i < 3; ++i) {
      double mean = p.population.col(i).mean();
      double wins = 0, total = 0;
      for (const CountMatrix& C : observers)
        for (int j = 0; j < 3; ++j) {
          if (j == i) continue;
          wins += C.counts(i, j);
          total += C.pair_total(i, j);
        }
      CHECK(mean == doctest::Approx(wins / total).epsilon(1e-12));
    }
  }
}
