#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace blockcorr {

enum class ErrorCode {
  InvalidArgument,
  Parse,
  MissingValue,
  ConstantColumn,
  NotStandardized,
  KTooLarge,
  EmptyRegion,
  InvalidRho0,
  InvalidLoadings,
  GridMismatch,
  TooFewProbes,
  NoProbesOnChromosome,
  DimensionMismatch,
  PatientMismatch,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// n patients (rows) by p genes (columns), genes in genomic order.
class ExpressionMatrix {
 public:
  ExpressionMatrix(Eigen::MatrixXd values, std::vector<std::string> gene_ids,
                   std::vector<std::string> patient_ids = {},
                   std::optional<std::vector<double>> positions = std::nullopt,
                   bool standardized = false);

  // Convenience for tests and simulations: genes are named g1..gp.
  explicit ExpressionMatrix(Eigen::MatrixXd values);

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  const std::vector<std::string>& gene_ids() const noexcept { return gene_ids_; }
  const std::vector<std::string>& patient_ids() const noexcept { return patient_ids_; }
  const std::optional<std::vector<double>>& positions() const noexcept { return positions_; }
  bool standardized() const noexcept { return standardized_; }

  int n() const noexcept { return static_cast<int>(values_.rows()); }
  int p() const noexcept { return static_cast<int>(values_.cols()); }

  // Columns [first, first + count) as a new matrix.
  ExpressionMatrix columns(int first, int count) const;
  // Columns in the given order.
  ExpressionMatrix select(const std::vector<int>& order) const;

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> gene_ids_;
  std::vector<std::string> patient_ids_;
  std::optional<std::vector<double>> positions_;
  bool standardized_;
};

// Centers every column and scales it to unit variance with divisor n.
// Throws ConstantColumn naming the first zero-variance gene.
ExpressionMatrix standardize(const ExpressionMatrix& matrix);

// 2-D cumulative sums of the empirical Gram matrix G = Y'Y / n.
// Blocks are half-open gene ranges [begin, end).
class GramPrefix {
 public:
  explicit GramPrefix(const ExpressionMatrix& standardized);

  int genes() const noexcept { return p_; }
  int samples() const noexcept { return n_; }

  double block_sum(int begin, int end) const;
  double entry(int j, int k) const;

 private:
  double at(int r, int c) const { return prefix_[static_cast<std::size_t>(r) * (p_ + 1) + c]; }

  int p_;
  int n_;
  std::vector<double> prefix_;
};

// Segment boundaries are breakpoints 0 = t0 < t1 < ... < tK = p; segment k
// covers genes [t_{k-1}, t_k).
struct Segmentation {
  std::vector<int> breakpoints;
  std::vector<double> rho;
  std::vector<double> segment_loglik;
  double total_loglik = 0.0;

  int segments() const noexcept { return static_cast<int>(breakpoints.size()) - 1; }
  int begin(int k) const { return breakpoints.at(k); }
  int end(int k) const { return breakpoints.at(k + 1); }
  int width(int k) const { return end(k) - begin(k); }
};

// One gene record from an annotation file.
struct GeneLocus {
  std::string id;
  std::string chromosome;
  double start = 0.0;
  double end = 0.0;
};

// Contiguous run of columns belonging to one chromosome after reordering.
struct ChromosomeSpan {
  std::string name;
  int first = 0;
  int count = 0;
};

// Orders chromosome names so that "2" < "10" and "chr2" < "chrX".
bool chromosome_less(const std::string& a, const std::string& b);

struct GenomeLayout {
  ExpressionMatrix matrix;             // columns regrouped by chromosome, sorted by start
  std::vector<ChromosomeSpan> chromosomes;
  std::vector<GeneLocus> loci;         // aligned with matrix columns
};

// Reorders the matrix columns by (chromosome, start). Every gene must be
// annotated; unknown genes raise InvalidArgument naming the gene. Without an
// annotation the whole matrix is one chromosome named "all".
GenomeLayout arrange_by_chromosome(const ExpressionMatrix& matrix,
                                   const std::vector<GeneLocus>& annotation);

}  // namespace blockcorr
