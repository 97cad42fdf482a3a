#include "blockcorr/sigtest.hpp"

#include "blockcorr/chisq.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace blockcorr {

double null_scale(int width, double rho, int n) {
  return (1.0 + (width - 1.0) * rho) / (static_cast<double>(n) * width);
}

double test_statistic(const ExpressionMatrix& matrix, int begin, int end) {
  if (begin < 0 || end > matrix.p() || begin >= end) {
    throw Error(ErrorCode::EmptyRegion, "empty or out-of-range region [" + std::to_string(begin) +
                                            ", " + std::to_string(end) + ")");
  }
  const Eigen::VectorXd means = matrix.values().middleCols(begin, end - begin).rowwise().mean();
  const double grand = means.mean();
  return (means.array() - grand).square().sum() / matrix.n();
}

namespace {

void check_rho0(double rho0, int width) {
  const double lower = width >= 2 ? -1.0 / (width - 1.0) : -1.0;
  if (!(rho0 > lower && rho0 < 1.0)) {
    throw Error(ErrorCode::InvalidRho0, "background correlation " + std::to_string(rho0) +
                                            " is outside (" + std::to_string(lower) + ", 1)");
  }
}

}  // namespace

double p_value(double t_obs, int width, double rho0, int n) {
  check_rho0(rho0, width);
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "p-value needs n >= 3");
  return ChiSquare(n - 1).sf(t_obs / null_scale(width, rho0, n));
}

double power(int n, int width, double rho, double rho0, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  const ChiSquare chi(n - 1);
  const double ratio = (1.0 + (width - 1.0) * rho0) / (1.0 + (width - 1.0) * rho);
  if (ratio == 1.0) return alpha;
  return chi.sf(ratio * chi.upper_quantile(alpha));
}

double estimate_rho0(const ExpressionMatrix& matrix) {
  const int p = matrix.p();
  if (p < 2) throw Error(ErrorCode::InvalidArgument, "background estimate needs at least two genes");
  const Eigen::MatrixXd centered = matrix.values().rowwise() - matrix.values().colwise().mean();
  const Eigen::VectorXd norms = centered.colwise().norm();

  std::vector<double> corr;
  corr.reserve(p - 1);
  for (int j = 1; j < p; ++j) {
    const double denom = norms(j - 1) * norms(j);
    corr.push_back(denom > 0.0 ? centered.col(j - 1).dot(centered.col(j)) / denom : 0.0);
  }
  const std::size_t m = corr.size();
  const std::size_t mid = m / 2;
  std::nth_element(corr.begin(), corr.begin() + mid, corr.end());
  double median = corr[mid];
  if (m % 2 == 0) {
    median = 0.5 * (median + *std::max_element(corr.begin(), corr.begin() + mid));
  }
  return std::min(1.0, std::fabs(median));
}

std::vector<double> adjust_p_values(std::span<const double> p_values, Adjustment method) {
  const std::size_t m = p_values.size();
  std::vector<double> out(p_values.begin(), p_values.end());
  if (m == 0 || method == Adjustment::None) return out;

  if (method == Adjustment::Bonferroni) {
    for (double& v : out) v = std::min(1.0, v * static_cast<double>(m));
    return out;
  }

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  double running = 1.0;
  for (std::size_t r = m; r-- > 0;) {
    const std::size_t idx = order[r];
    running = std::min(running, p_values[idx] * static_cast<double>(m) / static_cast<double>(r + 1));
    out[idx] = std::min(1.0, running);
  }
  return out;
}

std::vector<RegionReport> test_segments(const ExpressionMatrix& matrix,
                                        const Segmentation& segmentation, double rho0,
                                        const std::string& chromosome) {
  std::vector<RegionReport> reports;
  reports.reserve(segmentation.segments());
  const int n = matrix.n();
  for (int k = 0; k < segmentation.segments(); ++k) {
    RegionReport r;
    r.chromosome = chromosome;
    r.segment = k;
    r.begin = segmentation.begin(k);
    r.end = segmentation.end(k);
    r.start_gene = matrix.gene_ids().at(r.begin);
    r.end_gene = matrix.gene_ids().at(r.end - 1);
    r.rho_hat = k < static_cast<int>(segmentation.rho.size()) ? segmentation.rho[k] : 0.0;
    r.segment_loglik =
        k < static_cast<int>(segmentation.segment_loglik.size()) ? segmentation.segment_loglik[k] : 0.0;
    r.rho0 = rho0;
    r.testable = r.width() >= 2 && std::isfinite(rho0) && rho0 < 1.0 &&
                 rho0 > -1.0 / (r.width() - 1.0);
    if (r.testable) {
      r.t_obs = test_statistic(matrix, r.begin, r.end);
      r.lambda0 = null_scale(r.width(), rho0, n);
      r.p_value = p_value(r.t_obs, r.width(), rho0, n);
    }
    r.p_adjusted = r.p_value;
    reports.push_back(std::move(r));
  }
  return reports;
}

void finalize_reports(std::vector<RegionReport>& reports, Adjustment method, double alpha) {
  std::vector<double> raw;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (!reports[i].testable) continue;
    raw.push_back(reports[i].p_value);
    where.push_back(i);
  }
  const std::vector<double> adjusted = adjust_p_values(raw, method);
  for (std::size_t t = 0; t < where.size(); ++t) {
    RegionReport& r = reports[where[t]];
    r.p_adjusted = adjusted[t];
    r.significant = r.p_adjusted <= alpha;
  }
}

}  // namespace blockcorr
