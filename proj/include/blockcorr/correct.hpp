#pragma once

#include "blockcorr/core.hpp"
#include "blockcorr/seglik.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace blockcorr {

// Raw covariate measurements for one patient on one chromosome.
struct CovariateSeries {
  std::string patient;
  std::vector<double> positions;  // sorted
  std::vector<double> values;
};

// Piecewise-constant least-squares fit of a CovariateSeries.
struct CovariateFit {
  std::string patient;
  std::vector<double> positions;
  std::vector<double> values;
  std::vector<int> breakpoints;  // probe indices, 0 = t0 < ... < tK = probes
  std::vector<double> means;     // one per segment
  SelectionTrace trace;

  int probes() const noexcept { return static_cast<int>(positions.size()); }
  int segments() const noexcept { return static_cast<int>(means.size()); }
  int segment_of(int probe) const;
  double fitted(int probe) const { return means[segment_of(probe)]; }
};

struct CovariateOptions {
  double threshold = 0.7;
  int kmax = 0;  // 0 selects default_kmax(probes)
  SelectionRule rule = SelectionRule::LargestQualifying;
  std::optional<int> fixed_k;
};

// Minimum-RSS segmentation with K chosen by the slope-change rule on the
// Gaussian log-likelihood -N/2 log(RSS_K / N). Fewer than three probes
// cannot be model-selected and default to one segment unless K is fixed.
CovariateFit segment_covariate(const CovariateSeries& series, const CovariateOptions& options = {});

enum class AlignSource : std::uint8_t { SingleProbe, Averaged, Interpolated, Extended };

const char* to_string(AlignSource source);

struct GeneInterval {
  double start = 0.0;
  double end = 0.0;
};

// Covariate values on the expression grid, n patients x p genes.
struct AlignedCovariate {
  Eigen::MatrixXd x;
  std::vector<AlignSource> source;  // row-major n x p

  AlignSource source_at(int patient, int gene) const {
    return source[static_cast<std::size_t>(patient) * x.cols() + gene];
  }
};

// Probes inside [start - half_width, end + half_width] give the average of
// their distinct segment means; genes without probes interpolate linearly
// between the fitted values of the flanking probes, and take the nearest
// probe's value past either end of the track. fits[i] is patient i.
AlignedCovariate align_to_genes(std::span<const CovariateFit> fits,
                                std::span<const GeneInterval> genes, double half_width = 0.0,
                                const std::string& chromosome = "");

enum class CorrectionMode { Pooled, PerGene };

struct CorrectionResult {
  ExpressionMatrix residuals;
  // Pooled: one row (intercept, slopes...). Per-gene: one row per gene.
  Eigen::MatrixXd coefficients;
  bool degenerate = false;  // some covariate had zero variance and was dropped
};

// Regresses expression on one or more aligned covariates and returns the
// residuals Y - b0 - sum_c b_c x_c (not re-standardized).
CorrectionResult correct_expression(const ExpressionMatrix& matrix,
                                    std::span<const Eigen::MatrixXd> covariates,
                                    CorrectionMode mode = CorrectionMode::Pooled);

}  // namespace blockcorr
