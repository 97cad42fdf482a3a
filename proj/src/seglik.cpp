#include "blockcorr/seglik.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace blockcorr {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double rho_hat_unclamped(double block_sum, int width) {
  if (width < 2) return 0.0;
  const double w = width;
  return (block_sum - w) / (w * w - w);
}

double rho_hat(double block_sum, int width) {
  if (width < 2) return 0.0;
  const double lo = -1.0 / (width - 1.0) + kRhoClamp;
  const double hi = 1.0 - kRhoClamp;
  return std::clamp(rho_hat_unclamped(block_sum, width), lo, hi);
}

double segment_cost_from_sum(double block_sum, int width, int n) {
  const double nn = n;
  if (width == 1) return nn * (1.0 + std::log(std::max(block_sum, kLogFloor)));
  const double w = width;
  const double off = (w * w - block_sum) / (w * w - w);
  const double mean = block_sum / w;
  return nn * (w + (w - 1.0) * std::log(std::max(off, kLogFloor)) +
               std::log(std::max(mean, kLogFloor)));
}

double segment_cost_from_rho(double rho, int width, int n) {
  const double w = width;
  return n * (w + (w - 1.0) * std::log(1.0 - rho) + std::log(1.0 + (w - 1.0) * rho));
}

SegmentCostTable::SegmentCostTable(int length, const CostFn& cost) : length_(length) {
  if (length < 1) throw Error(ErrorCode::InvalidArgument, "cost table needs at least one item");
  const std::size_t stride = static_cast<std::size_t>(length) + 1;
  cost_.assign(stride * stride, kInf);
  for (int b = 0; b < length; ++b) {
    for (int e = b + 1; e <= length; ++e) cost_[b * stride + e] = cost(b, e);
  }
}

SegmentCostTable correlation_costs(const GramPrefix& gram) {
  const int n = gram.samples();
  return SegmentCostTable(gram.genes(), [&](int b, int e) {
    return segment_cost_from_sum(gram.block_sum(b, e), e - b, n);
  });
}

DpSolution::DpSolution(const SegmentCostTable& costs, int kmax, int min_length)
    : length_(costs.length()), kmax_(kmax) {
  if (min_length < 1) throw Error(ErrorCode::InvalidArgument, "minimum segment length must be >= 1");
  if (kmax < 1) throw Error(ErrorCode::InvalidArgument, "kmax must be >= 1");
  if (static_cast<long>(kmax) * min_length > length_) {
    throw Error(ErrorCode::KTooLarge, "cannot place " + std::to_string(kmax) +
                                          " segments of length >= " + std::to_string(min_length) +
                                          " in " + std::to_string(length_) + " items");
  }
  const std::size_t stride = static_cast<std::size_t>(length_) + 1;
  best_.assign((kmax_ + 1) * stride, kInf);
  arg_.assign((kmax_ + 1) * stride, -1);
  best_[0] = 0.0;
  for (int k = 1; k <= kmax_; ++k) {
    const double* prev = &best_[(k - 1) * stride];
    double* cur = &best_[k * stride];
    int* arg = &arg_[k * stride];
    for (int t = k * min_length; t <= length_; ++t) {
      double best = kInf;
      int best_s = -1;
      for (int s = (k - 1) * min_length; s <= t - min_length; ++s) {
        if (prev[s] == kInf) continue;
        const double v = prev[s] + costs(s, t);
        if (v < best) {
          best = v;
          best_s = s;
        }
      }
      cur[t] = best;
      arg[t] = best_s;
    }
  }
}

bool DpSolution::feasible(int k) const {
  return k >= 1 && k <= kmax_ && best_[k * (length_ + 1) + length_] < kInf;
}

double DpSolution::cost(int k) const {
  if (k < 1 || k > kmax_) throw Error(ErrorCode::KTooLarge, "K outside the solved range");
  return best_[k * (length_ + 1) + length_];
}

std::vector<int> DpSolution::breakpoints(int k) const {
  if (!feasible(k)) throw Error(ErrorCode::KTooLarge, "no feasible segmentation with K = " + std::to_string(k));
  std::vector<int> tau(k + 1);
  tau[k] = length_;
  int t = length_;
  for (int j = k; j >= 1; --j) {
    t = arg_[j * (length_ + 1) + t];
    tau[j - 1] = t;
  }
  return tau;
}

Segmentation make_segmentation(const GramPrefix& gram, std::vector<int> breakpoints) {
  Segmentation seg;
  seg.breakpoints = std::move(breakpoints);
  const int k = seg.segments();
  if (k < 1 || seg.breakpoints.front() != 0 || seg.breakpoints.back() != gram.genes()) {
    throw Error(ErrorCode::InvalidArgument, "breakpoints must run from 0 to p");
  }
  for (int s = 0; s < k; ++s) {
    const int b = seg.begin(s);
    const int e = seg.end(s);
    if (e <= b) throw Error(ErrorCode::InvalidArgument, "breakpoints must be strictly increasing");
    const double sum = gram.block_sum(b, e);
    seg.rho.push_back(rho_hat(sum, e - b));
    seg.segment_loglik.push_back(-0.5 * segment_cost_from_sum(sum, e - b, gram.samples()));
    seg.total_loglik += seg.segment_loglik.back();
  }
  return seg;
}

Segmentation dp_segment(const GramPrefix& gram, int k, int min_length) {
  if (k < 1 || static_cast<long>(k) * min_length > gram.genes()) {
    throw Error(ErrorCode::KTooLarge, "K = " + std::to_string(k) + " exceeds the " +
                                          std::to_string(gram.genes()) + " available genes");
  }
  const DpSolution dp(correlation_costs(gram), k, min_length);
  return make_segmentation(gram, dp.breakpoints(k));
}

double selection_penalty(int j, int p) {
  return 5.0 * j + 2.0 * j * std::log(static_cast<double>(p) / j);
}

SelectionTrace select_k(std::span<const double> loglik, int p, double threshold,
                        SelectionRule rule) {
  const int kmax = static_cast<int>(loglik.size());
  if (kmax < 3) throw Error(ErrorCode::InvalidArgument, "model selection needs kmax >= 3");

  SelectionTrace trace;
  trace.threshold = threshold;
  trace.loglik.assign(loglik.begin(), loglik.end());
  for (int j = 1; j <= kmax; ++j) trace.penalty.push_back(selection_penalty(j, p));

  const double span = loglik[kmax - 1] - loglik[0];
  if (span == 0.0 || !std::isfinite(span)) {
    trace.degenerate = true;
    trace.normalized.assign(kmax, 1.0);
    trace.second_diffs.assign(kmax - 2, 0.0);
    trace.chosen_k = 1;
    return trace;
  }

  const double scale = trace.penalty[kmax - 1] - trace.penalty[0];
  for (int k = 0; k < kmax; ++k) {
    trace.normalized.push_back((loglik[kmax - 1] - loglik[k]) / span * scale + 1.0);
  }
  const auto& lt = trace.normalized;
  std::optional<int> pick;
  for (int k = 0; k + 2 < kmax; ++k) {
    const double d = (lt[k] - lt[k + 1]) - (lt[k + 1] - lt[k + 2]);
    trace.second_diffs.push_back(d);
    if (d > threshold) {
      // d sits at K = k + 1; its slope change is located at K + 1.
      if (rule == SelectionRule::LargestQualifying || !pick) pick = k + 2;
    }
  }
  trace.chosen_k = pick.value_or(1);
  return trace;
}

int default_kmax(int p) { return std::min(p, std::max(20, p / 10)); }

SegmentResult segment_chromosome(const ExpressionMatrix& standardized,
                                 const SegmentOptions& options) {
  const GramPrefix gram(standardized);
  const int p = gram.genes();
  const int min_length = std::max(1, options.min_length);
  const int capacity = std::max(1, p / min_length);

  int kmax = options.kmax > 0 ? options.kmax : default_kmax(p);
  if (options.fixed_k) kmax = std::max(kmax, *options.fixed_k);
  kmax = std::min(kmax, capacity);
  if (options.fixed_k && *options.fixed_k > capacity) {
    throw Error(ErrorCode::KTooLarge, "K = " + std::to_string(*options.fixed_k) +
                                          " exceeds the " + std::to_string(p) + " available genes");
  }

  const DpSolution dp(correlation_costs(gram), kmax, min_length);

  SegmentResult result;
  result.trace.threshold = options.threshold;
  if (options.fixed_k) {
    result.trace.chosen_k = *options.fixed_k;
  } else if (kmax >= 3) {
    std::vector<double> loglik;
    loglik.reserve(kmax);
    for (int k = 1; k <= kmax; ++k) loglik.push_back(-0.5 * dp.cost(k));
    result.trace = select_k(loglik, p, options.threshold, options.rule);
  } else {
    // Too few genes for the slope criterion.
    result.trace.degenerate = true;
    result.trace.chosen_k = 1;
  }
  result.segmentation = make_segmentation(gram, dp.breakpoints(result.trace.chosen_k));
  return result;
}

}  // namespace blockcorr
