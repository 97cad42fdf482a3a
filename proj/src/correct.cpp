#include "blockcorr/correct.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace blockcorr {

int CovariateFit::segment_of(int probe) const {
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), probe);
  return static_cast<int>(it - breakpoints.begin()) - 1;
}

CovariateFit segment_covariate(const CovariateSeries& series, const CovariateOptions& options) {
  const int count = static_cast<int>(series.positions.size());
  if (count < 2 || series.values.size() != series.positions.size()) {
    throw Error(ErrorCode::TooFewProbes,
                "patient " + series.patient + " has fewer than two covariate probes");
  }
  if (!std::is_sorted(series.positions.begin(), series.positions.end())) {
    throw Error(ErrorCode::InvalidArgument, "probe positions of patient " + series.patient + " are not sorted");
  }

  std::vector<double> sum(count + 1, 0.0);
  std::vector<double> sq(count + 1, 0.0);
  const double shift = series.values.front();  // improves the RSS cancellation
  for (int i = 0; i < count; ++i) {
    const double v = series.values[i] - shift;
    sum[i + 1] = sum[i] + v;
    sq[i + 1] = sq[i] + v * v;
  }
  const SegmentCostTable rss(count, [&](int b, int e) {
    const double s = sum[e] - sum[b];
    return std::max(0.0, (sq[e] - sq[b]) - s * s / (e - b));
  });

  int kmax = options.kmax > 0 ? options.kmax : default_kmax(count);
  if (options.fixed_k) kmax = std::max(kmax, *options.fixed_k);
  kmax = std::min(kmax, count);
  if (options.fixed_k && *options.fixed_k > count) {
    throw Error(ErrorCode::KTooLarge, "K exceeds the probe count of patient " + series.patient);
  }
  const DpSolution dp(rss, kmax);

  CovariateFit fit;
  fit.patient = series.patient;
  fit.positions = series.positions;
  fit.values = series.values;
  fit.trace.threshold = options.threshold;
  int k = 1;
  if (options.fixed_k) {
    k = *options.fixed_k;
    fit.trace.chosen_k = k;
  } else if (kmax >= 3) {
    const double total = count;
    std::vector<double> loglik;
    for (int j = 1; j <= kmax; ++j) {
      loglik.push_back(-0.5 * total * std::log(std::max(dp.cost(j) / total, 1e-300)));
    }
    fit.trace = select_k(loglik, count, options.threshold, options.rule);
    k = fit.trace.chosen_k;
  } else {
    fit.trace.degenerate = true;
  }
  fit.breakpoints = dp.breakpoints(k);
  for (int s = 0; s < k; ++s) {
    const int b = fit.breakpoints[s];
    const int e = fit.breakpoints[s + 1];
    fit.means.push_back(shift + (sum[e] - sum[b]) / (e - b));
  }
  return fit;
}

const char* to_string(AlignSource source) {
  switch (source) {
    case AlignSource::SingleProbe: return "single";
    case AlignSource::Averaged: return "averaged";
    case AlignSource::Interpolated: return "interpolated";
    case AlignSource::Extended: return "extended";
  }
  return "unknown";
}

AlignedCovariate align_to_genes(std::span<const CovariateFit> fits,
                                std::span<const GeneInterval> genes, double half_width,
                                const std::string& chromosome) {
  const int n = static_cast<int>(fits.size());
  const int p = static_cast<int>(genes.size());
  AlignedCovariate out;
  out.x.resize(n, p);
  out.source.resize(static_cast<std::size_t>(n) * p);

  for (int i = 0; i < n; ++i) {
    const CovariateFit& fit = fits[i];
    if (fit.probes() == 0) {
      throw Error(ErrorCode::NoProbesOnChromosome,
                  "patient " + fit.patient + " has no covariate probes on chromosome " + chromosome);
    }
    const std::vector<double>& pos = fit.positions;
    for (int j = 0; j < p; ++j) {
      const double lo = genes[j].start - half_width;
      const double hi = genes[j].end + half_width;
      const int first = static_cast<int>(std::lower_bound(pos.begin(), pos.end(), lo) - pos.begin());
      const int last = static_cast<int>(std::upper_bound(pos.begin(), pos.end(), hi) - pos.begin());
      double value = 0.0;
      AlignSource src;
      if (last > first) {
        // Probes are ordered, so their segment indices are nondecreasing.
        double total = 0.0;
        int distinct = 0;
        int previous = -1;
        for (int t = first; t < last; ++t) {
          const int s = fit.segment_of(t);
          if (s != previous) {
            total += fit.means[s];
            ++distinct;
            previous = s;
          }
        }
        value = total / distinct;
        src = last - first == 1 ? AlignSource::SingleProbe : AlignSource::Averaged;
      } else if (first == 0) {
        value = fit.fitted(0);
        src = AlignSource::Extended;
      } else if (first == fit.probes()) {
        value = fit.fitted(fit.probes() - 1);
        src = AlignSource::Extended;
      } else {
        const int left = first - 1;
        const int right = first;
        const double mid = 0.5 * (genes[j].start + genes[j].end);
        const double w = (mid - pos[left]) / (pos[right] - pos[left]);
        value = fit.fitted(left) + w * (fit.fitted(right) - fit.fitted(left));
        src = AlignSource::Interpolated;
      }
      out.x(i, j) = value;
      out.source[static_cast<std::size_t>(i) * p + j] = src;
    }
  }
  return out;
}

namespace {

struct Fit {
  Eigen::VectorXd coef;  // intercept then one slope per covariate
  bool degenerate = false;
};

// OLS of y on the columns of x (plus intercept); zero-variance columns are
// dropped and receive a zero slope.
Fit least_squares(const Eigen::VectorXd& y, const Eigen::MatrixXd& x) {
  const Eigen::Index q = x.cols();
  const double ybar = y.mean();
  const Eigen::RowVectorXd xbar = x.colwise().mean();
  const Eigen::MatrixXd xc = x.rowwise() - xbar;
  const Eigen::VectorXd yc = y.array() - ybar;

  Fit fit;
  fit.coef = Eigen::VectorXd::Zero(q + 1);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index c = 0; c < q; ++c) {
    const double scale = std::max(1.0, x.col(c).cwiseAbs().maxCoeff());
    if (xc.col(c).squaredNorm() > 1e-24 * scale * scale * static_cast<double>(x.rows())) {
      keep.push_back(c);
    } else {
      fit.degenerate = true;
    }
  }
  if (!keep.empty()) {
    Eigen::MatrixXd xk(x.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t t = 0; t < keep.size(); ++t) xk.col(static_cast<Eigen::Index>(t)) = xc.col(keep[t]);
    const Eigen::VectorXd beta =
        (xk.transpose() * xk).colPivHouseholderQr().solve(xk.transpose() * yc);
    for (std::size_t t = 0; t < keep.size(); ++t) fit.coef(keep[t] + 1) = beta(static_cast<Eigen::Index>(t));
  }
  fit.coef(0) = ybar - xbar.dot(fit.coef.tail(q));
  return fit;
}

}  // namespace

CorrectionResult correct_expression(const ExpressionMatrix& matrix,
                                    std::span<const Eigen::MatrixXd> covariates,
                                    CorrectionMode mode) {
  const Eigen::Index n = matrix.n();
  const Eigen::Index p = matrix.p();
  const Eigen::Index q = static_cast<Eigen::Index>(covariates.size());
  for (const Eigen::MatrixXd& c : covariates) {
    if (c.rows() != n || c.cols() != p) {
      throw Error(ErrorCode::DimensionMismatch, "covariate matrix does not match the expression matrix");
    }
  }
  const Eigen::MatrixXd& y = matrix.values();
  Eigen::MatrixXd residuals(n, p);
  CorrectionResult result{matrix, {}, false};

  if (mode == CorrectionMode::Pooled) {
    const Eigen::Index cells = n * p;
    const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), cells);
    Eigen::MatrixXd xv(cells, q);
    for (Eigen::Index c = 0; c < q; ++c) {
      xv.col(c) = Eigen::Map<const Eigen::VectorXd>(covariates[c].data(), cells);
    }
    const Fit fit = least_squares(yv, xv);
    Eigen::VectorXd r = yv.array() - fit.coef(0);
    for (Eigen::Index c = 0; c < q; ++c) r -= fit.coef(c + 1) * xv.col(c);
    residuals = Eigen::Map<const Eigen::MatrixXd>(r.data(), n, p);
    result.coefficients = fit.coef.transpose();
    result.degenerate = fit.degenerate;
  } else {
    result.coefficients.resize(p, q + 1);
    for (Eigen::Index j = 0; j < p; ++j) {
      Eigen::MatrixXd xj(n, q);
      for (Eigen::Index c = 0; c < q; ++c) xj.col(c) = covariates[c].col(j);
      const Fit fit = least_squares(y.col(j), xj);
      Eigen::VectorXd r = y.col(j).array() - fit.coef(0);
      for (Eigen::Index c = 0; c < q; ++c) r -= fit.coef(c + 1) * xj.col(c);
      residuals.col(j) = r;
      result.coefficients.row(j) = fit.coef.transpose();
      result.degenerate = result.degenerate || fit.degenerate;
    }
  }
  result.residuals = ExpressionMatrix(std::move(residuals), matrix.gene_ids(), matrix.patient_ids(),
                                      matrix.positions(), false);
  return result;
}

}  // namespace blockcorr
