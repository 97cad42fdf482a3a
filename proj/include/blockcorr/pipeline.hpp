#pragma once

#include "blockcorr/core.hpp"
#include "blockcorr/correct.hpp"
#include "blockcorr/seglik.hpp"
#include "blockcorr/sigtest.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace blockcorr {

inline constexpr const char* kVersion = "1.0.0";

// Runs fn(0..count-1) on a small worker pool. Each index is handled once;
// callers write results into pre-sized slots so ordering stays fixed.
void parallel_for(int count, const std::function<void(int)>& fn);

struct ChromosomeFit {
  ChromosomeSpan span;
  ExpressionMatrix standardized;
  SegmentResult fit;
};

// Standardizes and segments every chromosome of the layout independently.
std::vector<ChromosomeFit> segment_genome(const GenomeLayout& layout, const SegmentOptions& options);

struct TestOptions {
  std::optional<double> rho0;  // fixed background; estimated per chromosome otherwise
  Adjustment adjustment = Adjustment::BenjaminiHochberg;
  double alpha = 0.05;
};

// Tests each chromosome's segments against its background (fixed or
// estimated on the same standardized signal) and adjusts genome-wide.
std::vector<RegionReport> test_genome(const std::vector<ChromosomeFit>& fits,
                                      const TestOptions& options);

// A region given by chromosome and first/last gene id, as read from a
// segmentation table.
struct RegionRef {
  std::string chromosome;
  std::string start_gene;
  std::string end_gene;
};

// Rebuilds per-chromosome fits from externally supplied regions. The regions
// of a chromosome must tile it in order; otherwise InvalidArgument.
std::vector<ChromosomeFit> fits_from_regions(const GenomeLayout& layout,
                                             const std::vector<RegionRef>& regions);

struct CovariateRecord {
  std::string patient;
  std::string chromosome;
  double position = 0.0;
  double value = 0.0;
};

struct CorrectionOptions {
  CorrectionMode mode = CorrectionMode::Pooled;
  CovariateOptions segmentation;
  double half_width = 0.0;
};

struct ChromosomeCorrection {
  std::string chromosome;
  Eigen::MatrixXd coefficients;
  bool degenerate = false;
  std::vector<CovariateFit> fits;     // one per patient
  std::vector<int> source_counts;     // indexed by AlignSource
};

struct GenomeCorrection {
  ExpressionMatrix corrected;         // columns in layout order
  std::vector<ChromosomeCorrection> chromosomes;
};

// Segments each patient's covariate track per chromosome, aligns it to the
// genes and regresses it out of the expression chromosome by chromosome.
// Patients are matched by identifier; mismatches raise PatientMismatch
// listing the unmatched identifiers.
GenomeCorrection correct_genome(const GenomeLayout& layout,
                                const std::vector<CovariateRecord>& covariates,
                                const CorrectionOptions& options);

}  // namespace blockcorr
