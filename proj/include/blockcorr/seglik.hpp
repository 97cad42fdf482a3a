#pragma once

#include "blockcorr/core.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace blockcorr {

inline constexpr double kRhoClamp = 1e-8;
inline constexpr double kLogFloor = 1e-12;

// Closed-form MLE of the common correlation of a block of `width` genes
// whose Gram entries sum to `block_sum`, without clamping.
double rho_hat_unclamped(double block_sum, int width);

// Same, clamped to (-1/(width-1) + 1e-8, 1 - 1e-8). Singletons give 0.
double rho_hat(double block_sum, int width);

// -2 * maximised log-likelihood of a compound-symmetry block of `width`
// genes observed on n patients. For width 1, block_sum is the diagonal entry.
double segment_cost_from_sum(double block_sum, int width, int n);

// The same quantity expressed through the fitted correlation:
// n [w + (w-1) log(1-rho) + log(1 + (w-1) rho)].
double segment_cost_from_rho(double rho, int width, int n);

// Upper-triangular table of segment costs c(begin, end) over half-open
// ranges of an ordered sequence of `length` items.
class SegmentCostTable {
 public:
  using CostFn = std::function<double(int begin, int end)>;

  SegmentCostTable(int length, const CostFn& cost);

  int length() const noexcept { return length_; }
  double operator()(int begin, int end) const {
    return cost_[static_cast<std::size_t>(begin) * (length_ + 1) + end];
  }

 private:
  int length_;
  std::vector<double> cost_;
};

// Builds c(a, b) = -2 L(a, b) for every block of a standardized chromosome.
SegmentCostTable correlation_costs(const GramPrefix& gram);

// Optimal segmentations for every K = 1..kmax from one dynamic programming pass.
class DpSolution {
 public:
  DpSolution(const SegmentCostTable& costs, int kmax, int min_length = 1);

  int kmax() const noexcept { return kmax_; }
  int length() const noexcept { return length_; }
  bool feasible(int k) const;
  // Minimal total cost with exactly k segments (+inf when infeasible).
  double cost(int k) const;
  std::vector<int> breakpoints(int k) const;

 private:
  int length_;
  int kmax_;
  std::vector<double> best_;  // (kmax + 1) x (length + 1)
  std::vector<int> arg_;
};

// Attaches per-segment correlation estimates and log-likelihoods.
Segmentation make_segmentation(const GramPrefix& gram, std::vector<int> breakpoints);

// Globally optimal segmentation of a standardized chromosome into exactly k
// blocks. Throws KTooLarge when k exceeds what the sequence can hold.
Segmentation dp_segment(const GramPrefix& gram, int k, int min_length = 1);

enum class SelectionRule {
  LargestQualifying,   // last slope change above S
  SmallestQualifying,  // first slope change above S
};

struct SelectionTrace {
  std::vector<double> loglik;        // index K-1
  std::vector<double> normalized;    // index K-1
  std::vector<double> penalty;       // index K-1
  std::vector<double> second_diffs;  // index K-1, K = 1..kmax-2
  int chosen_k = 1;
  double threshold = 0.7;
  bool degenerate = false;           // flat likelihood, fell back to K = 1
};

// Penalty shape 5 j + 2 j log(p / j).
double selection_penalty(int j, int p);

// Picks the number of segments from maximised log-likelihoods L_1..L_kmax.
// D_K measures the slope change of the normalised curve at K + 1, so the
// chosen value is one past the qualifying K; no qualifying K gives 1.
SelectionTrace select_k(std::span<const double> loglik, int p, double threshold = 0.7,
                        SelectionRule rule = SelectionRule::LargestQualifying);

int default_kmax(int p);

struct SegmentOptions {
  double threshold = 0.7;
  int kmax = 0;  // 0 selects default_kmax(p)
  int min_length = 1;
  SelectionRule rule = SelectionRule::LargestQualifying;
  std::optional<int> fixed_k;
};

struct SegmentResult {
  Segmentation segmentation;
  SelectionTrace trace;
};

// Full model fit on one standardized chromosome: costs, DP up to kmax,
// selection of K and the corresponding optimal segmentation.
SegmentResult segment_chromosome(const ExpressionMatrix& standardized,
                                 const SegmentOptions& options = {});

}  // namespace blockcorr
