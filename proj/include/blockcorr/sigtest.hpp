#pragma once

#include "blockcorr/core.hpp"

#include <span>
#include <string>
#include <vector>

namespace blockcorr {

// Scale of the null distribution: T ~ lambda * chi2_{n-1} with
// lambda = (1 + (width - 1) rho) / (n * width).
double null_scale(int width, double rho, int n);

// Between-patient variance of the within-block gene mean:
// n^-1 sum_i (m_i - m)^2 where m_i is patient i's mean over genes [begin, end).
// Exact in distribution for data with unit population variance; on
// empirically standardized data the test is conservative.
double test_statistic(const ExpressionMatrix& matrix, int begin, int end);

// Upper-tail chi2_{n-1} probability of t_obs / lambda(width, rho0).
double p_value(double t_obs, int width, double rho0, int n);

// Probability of rejecting H0: rho = rho0 at level alpha when the block
// correlation is rho.
double power(int n, int width, double rho, double rho0, double alpha);

// |median of adjacent-gene Pearson correlations|.
double estimate_rho0(const ExpressionMatrix& matrix);

enum class Adjustment { None, Bonferroni, BenjaminiHochberg };

std::vector<double> adjust_p_values(std::span<const double> p_values, Adjustment method);

struct RegionReport {
  std::string chromosome;
  int segment = 0;            // index within the chromosome
  int begin = 0;              // half-open gene range within the chromosome
  int end = 0;
  std::string start_gene;
  std::string end_gene;
  double rho_hat = 0.0;
  double segment_loglik = 0.0;
  bool testable = false;      // width >= 2 and a background level is known
  double rho0 = 0.0;
  double t_obs = 0.0;
  double lambda0 = 0.0;
  double p_value = 1.0;
  double p_adjusted = 1.0;
  bool significant = false;

  int width() const noexcept { return end - begin; }
};

// Tests every segment of one chromosome against rho0. Adjusted p-values are
// left equal to the raw ones; see finalize_reports.
std::vector<RegionReport> test_segments(const ExpressionMatrix& matrix,
                                        const Segmentation& segmentation, double rho0,
                                        const std::string& chromosome);

// Adjusts p-values over all testable regions jointly and flags those with
// adjusted value <= alpha.
void finalize_reports(std::vector<RegionReport>& reports, Adjustment method, double alpha);

}  // namespace blockcorr
