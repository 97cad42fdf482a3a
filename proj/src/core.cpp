#include "blockcorr/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

namespace blockcorr {

ExpressionMatrix::ExpressionMatrix(Eigen::MatrixXd values, std::vector<std::string> gene_ids,
                                   std::vector<std::string> patient_ids,
                                   std::optional<std::vector<double>> positions,
                                   bool standardized)
    : values_(std::move(values)),
      gene_ids_(std::move(gene_ids)),
      patient_ids_(std::move(patient_ids)),
      positions_(std::move(positions)),
      standardized_(standardized) {
  if (values_.cols() < 1) {
    throw Error(ErrorCode::InvalidArgument, "expression matrix has no genes");
  }
  if (values_.rows() < 3) {
    throw Error(ErrorCode::InvalidArgument,
                "expression matrix needs at least 3 patients, got " +
                    std::to_string(values_.rows()));
  }
  if (static_cast<Eigen::Index>(gene_ids_.size()) != values_.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "gene id count does not match column count");
  }
  if (!patient_ids_.empty() &&
      static_cast<Eigen::Index>(patient_ids_.size()) != values_.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "patient id count does not match row count");
  }
  if (positions_) {
    if (static_cast<Eigen::Index>(positions_->size()) != values_.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "position count does not match column count");
    }
    if (!std::is_sorted(positions_->begin(), positions_->end())) {
      throw Error(ErrorCode::InvalidArgument, "gene positions are not sorted");
    }
  }
  for (Eigen::Index j = 0; j < values_.cols(); ++j) {
    for (Eigen::Index i = 0; i < values_.rows(); ++i) {
      if (!std::isfinite(values_(i, j))) {
        throw Error(ErrorCode::MissingValue,
                    "missing or non-finite value for gene " + gene_ids_[j]);
      }
    }
  }
}

namespace {

std::vector<std::string> default_gene_ids(Eigen::Index p) {
  std::vector<std::string> ids;
  ids.reserve(p);
  for (Eigen::Index j = 0; j < p; ++j) ids.push_back("g" + std::to_string(j + 1));
  return ids;
}

}  // namespace

ExpressionMatrix::ExpressionMatrix(Eigen::MatrixXd values)
    : ExpressionMatrix(values, default_gene_ids(values.cols())) {}

ExpressionMatrix ExpressionMatrix::columns(int first, int count) const {
  if (first < 0 || count < 1 || first + count > p()) {
    throw Error(ErrorCode::InvalidArgument, "column range out of bounds");
  }
  std::vector<std::string> ids(gene_ids_.begin() + first, gene_ids_.begin() + first + count);
  std::optional<std::vector<double>> pos;
  if (positions_) pos.emplace(positions_->begin() + first, positions_->begin() + first + count);
  return ExpressionMatrix(values_.middleCols(first, count), std::move(ids), patient_ids_,
                          std::move(pos), standardized_);
}

ExpressionMatrix ExpressionMatrix::select(const std::vector<int>& order) const {
  Eigen::MatrixXd v(values_.rows(), static_cast<Eigen::Index>(order.size()));
  std::vector<std::string> ids;
  ids.reserve(order.size());
  for (std::size_t c = 0; c < order.size(); ++c) {
    v.col(static_cast<Eigen::Index>(c)) = values_.col(order[c]);
    ids.push_back(gene_ids_.at(order[c]));
  }
  return ExpressionMatrix(std::move(v), std::move(ids), patient_ids_, std::nullopt,
                          standardized_);
}

ExpressionMatrix standardize(const ExpressionMatrix& matrix) {
  const Eigen::MatrixXd& y = matrix.values();
  const double n = static_cast<double>(y.rows());
  Eigen::MatrixXd out(y.rows(), y.cols());
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    const double mean = y.col(j).mean();
    Eigen::VectorXd centered = y.col(j).array() - mean;
    const double var = centered.squaredNorm() / n;
    // Relative to the column scale so that large constant columns are caught.
    const double scale = std::max(1.0, y.col(j).cwiseAbs().maxCoeff());
    if (!(var > 1e-24 * scale * scale)) {
      throw Error(ErrorCode::ConstantColumn,
                  "gene " + matrix.gene_ids()[j] + " has zero variance");
    }
    out.col(j) = centered / std::sqrt(var);
  }
  return ExpressionMatrix(std::move(out), matrix.gene_ids(), matrix.patient_ids(),
                          matrix.positions(), true);
}

GramPrefix::GramPrefix(const ExpressionMatrix& standardized)
    : p_(standardized.p()), n_(standardized.n()) {
  if (!standardized.standardized()) {
    throw Error(ErrorCode::NotStandardized, "Gram prefix requires a standardized matrix");
  }
  const Eigen::MatrixXd& y = standardized.values();
  Eigen::MatrixXd gram = (y.transpose() * y) / static_cast<double>(n_);
  // Pin the unit diagonal; the product only reproduces it to rounding.
  gram.diagonal().setOnes();

  const std::size_t stride = static_cast<std::size_t>(p_) + 1;
  prefix_.assign(stride * stride, 0.0);
  for (int r = 0; r < p_; ++r) {
    double row_running = 0.0;
    for (int c = 0; c < p_; ++c) {
      row_running += gram(r, c);
      prefix_[(r + 1) * stride + (c + 1)] = prefix_[r * stride + (c + 1)] + row_running;
    }
  }
}

double GramPrefix::block_sum(int begin, int end) const {
  if (begin < 0 || end > p_ || begin >= end) {
    throw Error(ErrorCode::EmptyRegion, "invalid gene block [" + std::to_string(begin) + ", " +
                                            std::to_string(end) + ")");
  }
  // The diagonal is unit by construction; avoid the rounding of the differences.
  if (end - begin == 1) return 1.0;
  return at(end, end) - at(begin, end) - at(end, begin) + at(begin, begin);
}

double GramPrefix::entry(int j, int k) const {
  if (j == k) return 1.0;
  return at(j + 1, k + 1) - at(j, k + 1) - at(j + 1, k) + at(j, k);
}

namespace {

// Splits "chr12_random" into ("chr", 12, "_random") style keys.
struct ChromKey {
  std::string prefix;
  bool numeric = false;
  long number = 0;
  std::string rest;
};

ChromKey chrom_key(const std::string& name) {
  ChromKey key;
  std::string s = name;
  if (s.size() > 3 && (s.compare(0, 3, "chr") == 0 || s.compare(0, 3, "Chr") == 0)) s = s.substr(3);
  std::size_t i = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  if (i > 0) {
    key.numeric = true;
    key.number = std::stol(s.substr(0, i));
    key.rest = s.substr(i);
  } else {
    key.prefix = s;
  }
  return key;
}

}  // namespace

bool chromosome_less(const std::string& a, const std::string& b) {
  const ChromKey ka = chrom_key(a);
  const ChromKey kb = chrom_key(b);
  if (ka.numeric != kb.numeric) return ka.numeric;
  if (ka.numeric) {
    if (ka.number != kb.number) return ka.number < kb.number;
    if (ka.rest != kb.rest) return ka.rest < kb.rest;
    return a < b;
  }
  if (ka.prefix != kb.prefix) return ka.prefix < kb.prefix;
  return a < b;
}

GenomeLayout arrange_by_chromosome(const ExpressionMatrix& matrix,
                                   const std::vector<GeneLocus>& annotation) {
  const int p = matrix.p();
  if (annotation.empty()) {
    std::vector<GeneLocus> loci;
    loci.reserve(p);
    for (int j = 0; j < p; ++j) {
      loci.push_back({matrix.gene_ids()[j], "all", static_cast<double>(j + 1),
                      static_cast<double>(j + 1)});
    }
    return GenomeLayout{matrix, {{"all", 0, p}}, std::move(loci)};
  }

  std::unordered_map<std::string, const GeneLocus*> by_id;
  for (const GeneLocus& locus : annotation) by_id.emplace(locus.id, &locus);

  std::vector<const GeneLocus*> found(p);
  for (int j = 0; j < p; ++j) {
    auto it = by_id.find(matrix.gene_ids()[j]);
    if (it == by_id.end()) {
      throw Error(ErrorCode::InvalidArgument,
                  "gene " + matrix.gene_ids()[j] + " is missing from the annotation");
    }
    found[j] = it->second;
  }

  std::vector<int> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const GeneLocus& la = *found[a];
    const GeneLocus& lb = *found[b];
    if (la.chromosome != lb.chromosome) return chromosome_less(la.chromosome, lb.chromosome);
    return la.start < lb.start;
  });

  GenomeLayout layout{matrix.select(order), {}, {}};
  layout.loci.reserve(p);
  for (int c = 0; c < p; ++c) {
    const GeneLocus& locus = *found[order[c]];
    layout.loci.push_back(locus);
    if (layout.chromosomes.empty() || layout.chromosomes.back().name != locus.chromosome) {
      layout.chromosomes.push_back({locus.chromosome, c, 0});
    }
    ++layout.chromosomes.back().count;
  }
  return layout;
}

}  // namespace blockcorr
