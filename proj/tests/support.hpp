#pragma once

// Test-only oracles. Nothing here calls into the prefix-sum, closed-form or
// dynamic-programming paths it is used to check.

#include "blockcorr/core.hpp"
#include "blockcorr/pipeline.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace blockcorr::testing {

inline Eigen::MatrixXd normal_matrix(int n, int p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(n, p);
  for (int j = 0; j < p; ++j) {
    for (int i = 0; i < n; ++i) m(i, j) = normal(rng);
  }
  return m;
}

// Columns sharing a smoothly varying latent factor so that segments have
// non-trivial correlation.
inline Eigen::MatrixXd correlated_matrix(int n, int p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 0.9);
  Eigen::MatrixXd m(n, p);
  Eigen::VectorXd f(n);
  for (int i = 0; i < n; ++i) f(i) = normal(rng);
  double load = unif(rng);
  for (int j = 0; j < p; ++j) {
    if (j % 3 == 0) {
      for (int i = 0; i < n; ++i) f(i) = normal(rng);
      load = unif(rng);
    }
    for (int i = 0; i < n; ++i) m(i, j) = std::sqrt(load) * f(i) + std::sqrt(1 - load) * normal(rng);
  }
  return m;
}

// sum_{j,k in [a,b)} n^-1 sum_i y_ij y_ik, straight from the data.
inline double brute_block_sum(const Eigen::MatrixXd& y, int a, int b) {
  double total = 0.0;
  for (int j = a; j < b; ++j) {
    for (int k = a; k < b; ++k) total += y.col(j).dot(y.col(k));
  }
  return total / static_cast<double>(y.rows());
}

// -2 log-likelihood (without the 2 pi constant) of n centered observations
// with empirical second-moment matrix `gram` under exchangeable correlation
// rho, computed by dense linear algebra.
inline double exact_cost(const Eigen::MatrixXd& gram, double rho, int n) {
  const Eigen::Index w = gram.rows();
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(w, w, rho);
  sigma.diagonal().setOnes();
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(sigma);
  const double logdet = std::log(lu.determinant());
  return n * logdet + n * (lu.inverse() * gram).trace();
}

// Maximises the exact likelihood over a rho grid of the given step.
inline double grid_mle(const Eigen::MatrixXd& gram, int n, double step) {
  const Eigen::Index w = gram.rows();
  const double lo = -1.0 / (w - 1.0);
  double best = std::numeric_limits<double>::infinity();
  double arg = 0.0;
  for (double rho = std::ceil(lo / step) * step + step; rho < 1.0 - step / 2; rho += step) {
    const double c = exact_cost(gram, rho, n);
    if (c < best) {
      best = c;
      arg = rho;
    }
  }
  return arg;
}

// Minimum over every segmentation of [0, length) into k contiguous pieces.
// Costs are summed left to right, the same association the recursion uses.
inline double exhaustive_min(int length, int k, const std::function<double(int, int)>& cost,
                             std::vector<int>* best_tau = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> tau(k + 1, 0);
  tau[k] = length;
  std::function<void(int, int, double)> rec = [&](int piece, int start, double acc) {
    if (piece == k - 1) {
      const double total = acc + cost(start, length);
      if (total < best) {
        best = total;
        if (best_tau) {
          *best_tau = tau;
        }
      }
      return;
    }
    for (int end = start + 1; end <= length - (k - 1 - piece); ++end) {
      tau[piece + 1] = end;
      rec(piece + 1, end, acc + cost(start, end));
    }
  };
  rec(0, 0, 0.0);
  return best;
}

// Central interval [lo, hi] of Binomial(m, q) with P(X < lo) <= tail and
// P(X > hi) <= tail.
inline std::pair<int, int> binomial_interval(int m, double q, double tail) {
  std::vector<double> pmf(m + 1);
  for (int k = 0; k <= m; ++k) {
    pmf[k] = std::exp(std::lgamma(m + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0) +
                      k * std::log(q) + (m - k) * std::log1p(-q));
  }
  int lo = 0;
  double acc = 0.0;
  while (acc + pmf[lo] <= tail) acc += pmf[lo++];
  int hi = m;
  acc = 0.0;
  while (acc + pmf[hi] <= tail) acc += pmf[hi--];
  return {lo, hi};
}

inline double mean_pairwise_correlation(const Eigen::MatrixXd& y, int a, int b) {
  const Eigen::MatrixXd c = y.middleCols(a, b - a).rowwise() - y.middleCols(a, b - a).colwise().mean();
  const Eigen::VectorXd norms = c.colwise().norm();
  double total = 0.0;
  int pairs = 0;
  for (int j = 0; j < b - a; ++j) {
    for (int k = j + 1; k < b - a; ++k) {
      total += c.col(j).dot(c.col(k)) / (norms(j) * norms(k));
      ++pairs;
    }
  }
  return total / pairs;
}

inline double mean_cross_correlation(const Eigen::MatrixXd& y, int a, int b, int c0, int c1) {
  auto centered = [&](int j) {
    Eigen::VectorXd v = y.col(j).array() - y.col(j).mean();
    return Eigen::VectorXd(v / v.norm());
  };
  double total = 0.0;
  int pairs = 0;
  for (int j = a; j < b; ++j) {
    const Eigen::VectorXd u = centered(j);
    for (int k = c0; k < c1; ++k) {
      total += u.dot(centered(k));
      ++pairs;
    }
  }
  return total / pairs;
}


// Expression driven by a copy-number-like covariate on a single chromosome.
// Genes in `cnv_blocks` share a patient-specific covariate level that shifts
// expression with slope `effect`; `planted` is an extra correlated block that
// does not depend on the covariate.
struct CovariateScenario {
  ExpressionMatrix expression;
  Eigen::MatrixXd x;                       // exact covariate per gene
  std::vector<GeneLocus> annotation;
  std::vector<CovariateRecord> probes;     // noisy probe-level observations
  std::vector<std::pair<int, int>> cnv_blocks;
  std::pair<int, int> planted;
  double rho0 = 0.0;
  double rho1 = 0.0;
};

inline CovariateScenario covariate_scenario(std::uint64_t seed, int n = 58, int p = 200,
                                            double rho0 = 0.15, double rho1 = 0.7,
                                            double effect = 0.8, double probe_sd = 0.2) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  CovariateScenario sc{ExpressionMatrix(Eigen::MatrixXd::Ones(3, 1)), {}, {}, {}, {}, {}, rho0, rho1};
  sc.cnv_blocks = {{20, 45}, {110, 135}, {160, 185}};
  sc.planted = {70, 80};

  std::vector<double> starts(p);
  std::vector<std::string> ids(p);
  for (int j = 0; j < p; ++j) {
    starts[j] = 10000.0 * (j + 1);
    ids[j] = "g" + std::to_string(j + 1);
    sc.annotation.push_back({ids[j], "1", starts[j], starts[j] + 5000.0});
  }
  std::vector<std::string> patients(n);
  for (int i = 0; i < n; ++i) patients[i] = "p" + std::to_string(i + 1);

  Eigen::MatrixXd level(n, sc.cnv_blocks.size());
  for (Eigen::Index b = 0; b < level.cols(); ++b) {
    for (int i = 0; i < n; ++i) level(i, b) = normal(rng);
  }
  sc.x = Eigen::MatrixXd::Zero(n, p);
  for (std::size_t b = 0; b < sc.cnv_blocks.size(); ++b) {
    for (int j = sc.cnv_blocks[b].first; j < sc.cnv_blocks[b].second; ++j) {
      sc.x.col(j) = level.col(static_cast<Eigen::Index>(b));
    }
  }

  Eigen::MatrixXd y(n, p);
  Eigen::VectorXd w(n), u(n);
  for (int i = 0; i < n; ++i) {
    w(i) = normal(rng);
    u(i) = normal(rng);
  }
  for (int j = 0; j < p; ++j) {
    const bool in_planted = j >= sc.planted.first && j < sc.planted.second;
    const double rho = in_planted ? rho1 : rho0;
    for (int i = 0; i < n; ++i) {
      double v = std::sqrt(rho0) * w(i) + std::sqrt(1.0 - rho) * normal(rng) + effect * sc.x(i, j);
      if (in_planted) v += std::sqrt(rho1 - rho0) * u(i);
      y(i, j) = v;
    }
  }
  sc.expression = ExpressionMatrix(y, ids, patients);

  // Probes every 2.5 kb; a probe carries a block's level when it lies within
  // the block's genomic span (from 2.5 kb before its first gene to 2.5 kb
  // after its last gene).
  for (int i = 0; i < n; ++i) {
    for (double pos = 5000.0; pos <= 10000.0 * (p + 1); pos += 2500.0) {
      double value = 0.0;
      for (std::size_t b = 0; b < sc.cnv_blocks.size(); ++b) {
        const double lo = starts[sc.cnv_blocks[b].first] - 2500.0;
        const double hi = starts[sc.cnv_blocks[b].second - 1] + 5000.0 + 2500.0;
        if (pos >= lo && pos <= hi) value = level(i, static_cast<Eigen::Index>(b));
      }
      sc.probes.push_back({patients[i], "1", pos, value + probe_sd * normal(rng)});
    }
  }
  return sc;
}

}  // namespace blockcorr::testing
