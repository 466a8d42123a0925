#include "pwscale/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "pwscale/normal.hpp"

namespace pwscale {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

struct PairObs {
  int i, j;       // i < j
  int c_ij, c_ji; // wins of i over j and of j over i
  int n;          // c_ij + c_ji
};

std::vector<PairObs> compared_pairs(const CountMatrix& C) {
  std::vector<PairObs> pairs;
  const int n = C.size();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      int cij = C.counts(i, j), cji = C.counts(j, i);
      if (cij + cji > 0) pairs.push_back({i, j, cij, cji, cij + cji});
    }
  return pairs;
}

// d/d(delta) of pair_log_likelihood: (c * h(x) - (n - c) * h(-x)) / sigma,
// with x = delta / sigma and h the Normal hazard phi/Phi.
double pair_log_likelihood_deriv(double delta, int c, int n, double sigma) {
  double x = delta / sigma;
  return (c * norm_hazard(x) - (n - c) * norm_hazard(-x)) / sigma;
}

// Fixed mixture defining the finite-distance prior: one desaturated
// binomial component per compared pair, parameterized by the winner's
// count and evaluated at the distance magnitude, so the density does not
// depend on pair orientation.
struct PriorMixture {
  std::vector<std::pair<int, int>> components;  // (c*, n)
  double sigma = 1.4826;

  static PriorMixture from_counts(const CountMatrix& C, double sigma) {
    PriorMixture prior;
    prior.sigma = sigma;
    for (const PairObs& p : compared_pairs(C))
      prior.components.emplace_back(
          desaturate_count(std::max(p.c_ij, p.c_ji), p.n), p.n);
    return prior;
  }

  double density(double z) const {
    double a = std::abs(z);
    double sum = 0.0;
    for (auto [c, n] : components)
      sum += std::exp(pair_log_likelihood(a, c, n, sigma));
    return sum / static_cast<double>(components.size());
  }

  double density_deriv(double z) const {
    double a = std::abs(z);
    double sum = 0.0;
    for (auto [c, n] : components)
      sum += std::exp(pair_log_likelihood(a, c, n, sigma)) *
             pair_log_likelihood_deriv(a, c, n, sigma);
    double sign = z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0);
    return sign * sum / static_cast<double>(components.size());
  }
};

// Log-posterior (or plain log-likelihood when the prior is off) over the
// full score vector, plus its analytic gradient.
struct Objective {
  const std::vector<PairObs>& pairs;
  const ScaleOptions& opts;
  const PriorMixture* prior;  // null when opts.use_prior is false

  double value(const Eigen::VectorXd& q) const {
    double total = 0.0;
    for (const PairObs& p : pairs) {
      double z = q[p.i] - q[p.j];
      total += pair_log_likelihood(z, p.c_ij, p.n, opts.sigma_ij);
      if (prior) total += std::log(prior->density(z) + opts.gamma);
    }
    return total;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& q) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(q.size());
    for (const PairObs& p : pairs) {
      double z = q[p.i] - q[p.j];
      double dz = pair_log_likelihood_deriv(z, p.c_ij, p.n, opts.sigma_ij);
      if (prior)
        dz += prior->density_deriv(z) / (prior->density(z) + opts.gamma);
      g[p.i] += dz;
      g[p.j] -= dz;
    }
    return g;
  }
};

std::string format_components(const std::vector<std::vector<int>>& comps) {
  std::ostringstream out;
  for (size_t k = 0; k < comps.size(); ++k) {
    out << (k ? " | " : "") << "{";
    for (size_t i = 0; i < comps[k].size(); ++i)
      out << (i ? "," : "") << comps[k][i];
    out << "}";
  }
  return out.str();
}

void require_connected(const CountMatrix& C) {
  auto comps = comparison_components(C);
  if (comps.size() > 1)
    throw Error("comparison graph is disconnected: components " +
                format_components(comps));
}

// Least-squares scores for a pair list with finite target distances
// d = q_i - q_j; q[0] anchored at 0.
Eigen::VectorXd least_squares_scores(int n, const std::vector<PairObs>& pairs,
                                     const std::vector<double>& d) {
  if (n == 1) return Eigen::VectorXd::Zero(1);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n - 1, n - 1);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n - 1);
  for (size_t k = 0; k < pairs.size(); ++k) {
    int i = pairs[k].i, j = pairs[k].j;
    // Residual (q_i - q_j) - d over free variables q_1..q_{n-1}.
    if (i > 0) {
      A(i - 1, i - 1) += 1.0;
      b[i - 1] += d[k];
    }
    if (j > 0) {
      A(j - 1, j - 1) += 1.0;
      b[j - 1] -= d[k];
    }
    if (i > 0 && j > 0) {
      A(i - 1, j - 1) -= 1.0;
      A(j - 1, i - 1) -= 1.0;
    }
  }
  Eigen::VectorXd x = A.ldlt().solve(b);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
  q.tail(n - 1) = x;
  if (!q.allFinite()) q.setZero();
  return q;
}

}  // namespace

Eigen::MatrixXd empirical_probabilities(const CountMatrix& C) {
  const int n = C.size();
  Eigen::MatrixXd P = Eigen::MatrixXd::Constant(n, n, kNaN);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      int total = C.pair_total(i, j);
      if (total > 0) P(i, j) = static_cast<double>(C.counts(i, j)) / total;
    }
  return P;
}

double prob_to_jod(double p, double sigma_ij) {
  if (sigma_ij <= 0.0) throw DomainError("prob_to_jod: sigma_ij must be > 0");
  return sigma_ij * norm_ppf(p);
}

Eigen::MatrixXd distance_matrix(const CountMatrix& C,
                                const ScaleOptions& opts) {
  Eigen::MatrixXd P = empirical_probabilities(C);
  const int n = C.size();
  Eigen::MatrixXd D = Eigen::MatrixXd::Constant(n, n, kNaN);
  for (int i = 0; i < n; ++i) {
    D(i, i) = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j || std::isnan(P(i, j))) continue;
      if (P(i, j) == 1.0)
        D(i, j) = kInf;
      else if (P(i, j) == 0.0)
        D(i, j) = -kInf;
      else
        D(i, j) = prob_to_jod(P(i, j), opts.sigma_ij);
    }
  }
  return D;
}

ScaleResult scale_least_squares(const Eigen::MatrixXd& D) {
  const int n = static_cast<int>(D.rows());
  std::vector<PairObs> pairs;
  std::vector<double> d;
  CountMatrix graph = CountMatrix::zero(n);  // presence only
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (std::isnan(D(i, j))) continue;
      if (std::isinf(D(i, j)))
        throw Error("unanimous answers present; use MLE");
      pairs.push_back({i, j, 1, 0, 1});
      d.push_back(D(i, j));
      graph.counts(i, j) = 1;
    }
  require_connected(graph);

  ScaleResult result;
  result.jod = least_squares_scores(n, pairs, d);
  double ss = 0.0;
  for (size_t k = 0; k < pairs.size(); ++k) {
    double r = (result.jod[pairs[k].i] - result.jod[pairs[k].j]) - d[k];
    ss += r * r;
  }
  result.log_posterior = -ss;
  result.converged = true;
  return result;
}

double pair_log_likelihood(double delta, int c, int n, double sigma_ij) {
  if (c < 0 || n < 1 || c > n)
    throw DomainError("pair_log_likelihood: counts must satisfy 0 <= c <= n");
  double x = delta / sigma_ij;
  return log_binom(n, c) + c * log_norm_cdf(x) + (n - c) * log_norm_cdf(-x);
}

double total_log_likelihood(const Eigen::VectorXd& q, const CountMatrix& C,
                            const ScaleOptions& opts) {
  double total = 0.0;
  for (const PairObs& p : compared_pairs(C))
    total += pair_log_likelihood(q[p.i] - q[p.j], p.c_ij, p.n, opts.sigma_ij);
  return total;
}

Eigen::VectorXd log_likelihood_gradient(const Eigen::VectorXd& q,
                                        const CountMatrix& C,
                                        const ScaleOptions& opts) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(q.size());
  for (const PairObs& p : compared_pairs(C)) {
    double dz =
        pair_log_likelihood_deriv(q[p.i] - q[p.j], p.c_ij, p.n, opts.sigma_ij);
    g[p.i] += dz;
    g[p.j] -= dz;
  }
  return g;
}

int desaturate_count(int c, int n) {
  if (c < 0 || c > n) throw DomainError("desaturate_count: 0 <= c <= n required");
  if (n < 2) return c;  // no non-unanimous neighbour exists
  if (c == n) return n - 1;
  if (c == 0) return 1;
  return c;
}

double prior_density(double z, const CountMatrix& C, const ScaleOptions& opts) {
  PriorMixture prior = PriorMixture::from_counts(C, opts.sigma_ij);
  if (prior.components.empty())
    throw Error("prior_density: no compared pairs");
  return prior.density(z);
}

ScaleResult scale_mle(const CountMatrix& C, const ScaleOptions& opts) {
  const int n = C.size();
  ScaleResult result;
  if (n == 1) {
    result.jod = Eigen::VectorXd::Zero(1);
    result.converged = true;
    return result;
  }
  require_connected(C);

  std::vector<PairObs> pairs = compared_pairs(C);
  PriorMixture prior;
  if (opts.use_prior) prior = PriorMixture::from_counts(C, opts.sigma_ij);
  Objective objective{pairs, opts, opts.use_prior ? &prior : nullptr};

  // Initialize from least squares on the distance matrix with unanimous
  // entries clamped to +-4 sigma.
  std::vector<double> d(pairs.size());
  Eigen::MatrixXd D = distance_matrix(C, opts);
  for (size_t k = 0; k < pairs.size(); ++k) {
    double dist = D(pairs[k].i, pairs[k].j);
    if (std::isinf(dist)) dist = std::copysign(4.0 * opts.sigma_ij, dist);
    d[k] = dist;
  }
  Eigen::VectorXd q = least_squares_scores(n, pairs, d);

  // BFGS over the free coordinates q_1..q_{n-1}, minimizing -objective.
  const int dim = n - 1;
  auto pack = [&](const Eigen::VectorXd& full) {
    return Eigen::VectorXd(full.tail(dim));
  };
  auto unpack = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(n);
    full.tail(dim) = x;
    return full;
  };
  auto f = [&](const Eigen::VectorXd& x) { return -objective.value(unpack(x)); };
  auto grad = [&](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(-objective.gradient(unpack(x)).tail(dim));
  };

  Eigen::VectorXd x = pack(q);
  double fx = f(x);
  Eigen::VectorXd g = grad(x);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(dim, dim);

  result.converged = false;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() < opts.grad_tolerance) {
      result.converged = true;
      break;
    }
    Eigen::VectorXd dir = -(H * g);
    double slope = g.dot(dir);
    if (slope >= 0.0) {  // not a descent direction; reset
      H.setIdentity();
      dir = -g;
      slope = g.dot(dir);
    }
    // Armijo backtracking.
    double step = 1.0;
    double f_new = fx;
    Eigen::VectorXd x_new = x;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * dir;
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) {
      result.converged = g.lpNorm<Eigen::Infinity>() < 1e-4;
      break;
    }
    Eigen::VectorXd g_new = grad(x_new);
    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd y = g_new - g;
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      // Sherman-Morrison BFGS update of the inverse Hessian.
      Eigen::VectorXd Hy = H * y;
      double yHy = y.dot(Hy);
      H += ((sy + yHy) / (sy * sy)) * (s * s.transpose()) -
           (Hy * s.transpose() + s * Hy.transpose()) / sy;
    }
    double change = std::abs(fx - f_new) / (std::abs(fx) + 1e-12);
    x = x_new;
    fx = f_new;
    g = g_new;
    if (change < opts.tolerance) {
      result.converged = true;
      break;
    }
  }

  result.jod = unpack(x);
  result.log_posterior = -fx;
  return result;
}

std::vector<std::vector<int>> comparison_components(const CountMatrix& C) {
  const int n = C.size();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (C.pair_total(i, j) > 0) parent[find(i)] = find(j);
  std::map<int, std::vector<int>> groups;
  for (int v = 0; v < n; ++v) groups[find(v)].push_back(v);
  std::vector<std::vector<int>> comps;
  for (auto& [root, members] : groups) comps.push_back(std::move(members));
  return comps;
}

CountMatrix drop_unanimous(const CountMatrix& C) {
  CountMatrix out = C;
  const int n = C.size();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      int total = C.pair_total(i, j);
      if (total > 0 && (C.counts(i, j) == 0 || C.counts(j, i) == 0)) {
        out.counts(i, j) = 0;
        out.counts(j, i) = 0;
      }
    }
  return out;
}

}  // namespace pwscale
