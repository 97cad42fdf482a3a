#include "blockcorr/simulate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

namespace blockcorr {

void ScenarioSpec::validate() const {
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "scenario needs n >= 3");
  if (!(rho1 < 1.0)) throw Error(ErrorCode::InvalidLoadings, "rho1 must be below 1");
  if (chromosomes.empty()) throw Error(ErrorCode::InvalidArgument, "scenario has no chromosomes");
  for (const ChromosomeSpec& c : chromosomes) {
    if (c.genes < 1) throw Error(ErrorCode::InvalidArgument, "chromosome " + c.name + " has no genes");
    if (!(c.rho0 >= 0.0)) {
      throw Error(ErrorCode::InvalidLoadings, "chromosome " + c.name + ": rho0 must be >= 0");
    }
    if (rho1 < c.rho0) {
      throw Error(ErrorCode::InvalidLoadings, "chromosome " + c.name + ": rho1 is below rho0");
    }
    int at = 0;
    for (const RegionSpec& r : c.regions) {
      if (r.begin != at || r.end <= r.begin) {
        throw Error(ErrorCode::InvalidArgument, "regions of chromosome " + c.name + " do not tile it");
      }
      at = r.end;
    }
    if (at != c.genes) {
      throw Error(ErrorCode::InvalidArgument, "regions of chromosome " + c.name + " do not tile it");
    }
  }
}

std::vector<RegionSpec> alternating_regions(int genes, std::mt19937_64& rng) {
  static constexpr std::array<int, 5> kH1Lengths{3, 5, 10, 20, 40};
  constexpr int kMinGap = 20;
  std::uniform_int_distribution<int> h0_len(kMinGap, 60);
  std::uniform_int_distribution<int> h1_pick(0, static_cast<int>(kH1Lengths.size()) - 1);

  std::vector<RegionSpec> regions;
  int at = 0;
  bool h1 = false;
  while (at < genes) {
    const int len = h1 ? kH1Lengths[h1_pick(rng)] : h0_len(rng);
    // Close with an H0 region when the next block would not leave room.
    if (at + len >= genes || (h1 && genes - (at + len) < kMinGap)) {
      if (!regions.empty() && !regions.back().h1) {
        regions.back().end = genes;
      } else {
        regions.push_back({at, genes, false});
      }
      break;
    }
    regions.push_back({at, at + len, h1});
    at += len;
    h1 = !h1;
  }
  return regions;
}

ScenarioSpec scenario_uniform_background(int n, double rho0, double rho1, std::uint64_t seed,
                                         int chromosomes, int genes) {
  ScenarioSpec spec;
  spec.n = n;
  spec.rho1 = rho1;
  spec.seed = seed;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (int c = 0; c < chromosomes; ++c) {
    spec.chromosomes.push_back(
        {std::to_string(c + 1), genes, rho0, alternating_regions(genes, rng)});
  }
  return spec;
}

ScenarioSpec scenario_varying_background(int n, double rho1, std::uint64_t seed, int chromosomes,
                                         int genes) {
  ScenarioSpec spec = scenario_uniform_background(n, 0.0, rho1, seed, chromosomes, genes);
  std::mt19937_64 rng(seed ^ 0x51ed270b27ad1a1dULL);
  std::uniform_real_distribution<double> background(0.08, 0.28);
  for (ChromosomeSpec& c : spec.chromosomes) c.rho0 = background(rng);
  return spec;
}

SimulatedData generate(const ScenarioSpec& spec) {
  spec.validate();
  int total = 0;
  for (const ChromosomeSpec& c : spec.chromosomes) total += c.genes;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = spec.n;

  Eigen::MatrixXd y(n, total);
  std::vector<std::string> ids;
  std::vector<GeneLocus> annotation;
  std::vector<ChromosomeSpan> spans;
  std::vector<bool> h1;
  std::vector<int> chromosome_of;
  ids.reserve(total);

  int col = 0;
  for (std::size_t ci = 0; ci < spec.chromosomes.size(); ++ci) {
    const ChromosomeSpec& chr = spec.chromosomes[ci];
    spans.push_back({chr.name, col, chr.genes});
    Eigen::VectorXd shared(n);
    for (int i = 0; i < n; ++i) shared(i) = normal(rng);
    const double a0 = std::sqrt(chr.rho0);
    for (const RegionSpec& region : chr.regions) {
      Eigen::VectorXd local = Eigen::VectorXd::Zero(n);
      double a1 = 0.0;
      double noise = std::sqrt(1.0 - chr.rho0);
      if (region.h1) {
        for (int i = 0; i < n; ++i) local(i) = normal(rng);
        a1 = std::sqrt(spec.rho1 - chr.rho0);
        noise = std::sqrt(1.0 - spec.rho1);
      }
      for (int j = region.begin; j < region.end; ++j, ++col) {
        for (int i = 0; i < n; ++i) y(i, col) = a0 * shared(i) + a1 * local(i) + noise * normal(rng);
        std::string id = "c" + chr.name + "_g" + std::to_string(j + 1);
        const double start = 10000.0 * (j + 1);
        annotation.push_back({id, chr.name, start, start + 5000.0});
        ids.push_back(std::move(id));
        h1.push_back(region.h1);
        chromosome_of.push_back(static_cast<int>(ci));
      }
    }
  }

  std::vector<std::string> patients;
  for (int i = 0; i < n; ++i) patients.push_back("p" + std::to_string(i + 1));
  return SimulatedData{ExpressionMatrix(std::move(y), std::move(ids), std::move(patients)),
                       std::move(annotation), std::move(spans), std::move(h1),
                       std::move(chromosome_of)};
}

Eigen::MatrixXd compound_symmetry_sample(int n, int width, double rho, std::mt19937_64& rng) {
  if (!(rho >= 0.0 && rho < 1.0)) throw Error(ErrorCode::InvalidLoadings, "rho must lie in [0, 1)");
  std::normal_distribution<double> normal(0.0, 1.0);
  const double a = std::sqrt(rho);
  const double b = std::sqrt(1.0 - rho);
  Eigen::MatrixXd y(n, width);
  for (int i = 0; i < n; ++i) {
    const double f = normal(rng);
    for (int j = 0; j < width; ++j) y(i, j) = a * f + b * normal(rng);
  }
  return y;
}

namespace {

void check_grid(std::size_t a, std::size_t b) {
  if (a != b) throw Error(ErrorCode::GridMismatch, "truth and calls cover different gene grids");
}

std::vector<double> sweep(const std::vector<double>& scores, std::vector<double> thresholds) {
  if (thresholds.empty()) thresholds = scores;
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  return thresholds;
}

double rate(int num, int den) { return den > 0 ? static_cast<double>(num) / den : 0.0; }

EvalCurve close_curve(std::vector<RocPoint> points) {
  points.push_back({-std::numeric_limits<double>::infinity(), 0.0, 0.0});
  points.push_back({std::numeric_limits<double>::infinity(), 1.0, 1.0});
  std::sort(points.begin(), points.end(), [](const RocPoint& a, const RocPoint& b) {
    if (a.fpr != b.fpr) return a.fpr < b.fpr;
    return a.tpr < b.tpr;
  });
  EvalCurve curve;
  for (std::size_t k = 1; k < points.size(); ++k) {
    curve.auc += 0.5 * (points[k].fpr - points[k - 1].fpr) * (points[k].tpr + points[k - 1].tpr);
  }
  curve.points = std::move(points);
  return curve;
}

}  // namespace

EvalCurve gene_metrics(const std::vector<bool>& truth, const std::vector<double>& scores,
                       std::vector<double> thresholds) {
  check_grid(truth.size(), scores.size());
  const int positives = static_cast<int>(std::count(truth.begin(), truth.end(), true));
  const int negatives = static_cast<int>(truth.size()) - positives;
  std::vector<RocPoint> points;
  for (double t : sweep(scores, std::move(thresholds))) {
    int tp = 0;
    int fp = 0;
    for (std::size_t g = 0; g < truth.size(); ++g) {
      if (scores[g] <= t) (truth[g] ? tp : fp) += 1;
    }
    points.push_back({t, rate(tp, positives), rate(fp, negatives)});
  }
  return close_curve(std::move(points));
}

RegionCounts count_status_runs(const std::vector<bool>& truth, const std::vector<bool>& called,
                               const std::vector<int>& chromosome_of) {
  check_grid(truth.size(), called.size());
  if (!chromosome_of.empty()) check_grid(truth.size(), chromosome_of.size());
  RegionCounts counts;
  int previous = -1;
  for (std::size_t g = 0; g < truth.size(); ++g) {
    const int status = (truth[g] ? 2 : 0) + (called[g] ? 1 : 0);
    const bool new_chromosome = g > 0 && !chromosome_of.empty() && chromosome_of[g] != chromosome_of[g - 1];
    if (status != previous || new_chromosome) {
      switch (status) {
        case 0: ++counts.true_negative; break;
        case 1: ++counts.false_positive; break;
        case 2: ++counts.false_negative; break;
        default: ++counts.true_positive; break;
      }
    }
    previous = status;
  }
  return counts;
}

EvalCurve region_metrics(const std::vector<bool>& truth, const std::vector<double>& scores,
                         const std::vector<int>& chromosome_of, std::vector<double> thresholds) {
  check_grid(truth.size(), scores.size());
  std::vector<RocPoint> points;
  std::vector<bool> called(truth.size());
  for (double t : sweep(scores, std::move(thresholds))) {
    for (std::size_t g = 0; g < truth.size(); ++g) called[g] = scores[g] <= t;
    const RegionCounts c = count_status_runs(truth, called, chromosome_of);
    points.push_back({t, rate(c.true_positive, c.true_positive + c.false_negative),
                      rate(c.false_positive, c.false_positive + c.true_negative)});
  }
  return close_curve(std::move(points));
}

EvalResult evaluate(const std::vector<bool>& truth, const std::vector<double>& scores,
                    const std::vector<int>& chromosome_of, std::vector<double> thresholds) {
  return {gene_metrics(truth, scores, thresholds),
          region_metrics(truth, scores, chromosome_of, thresholds)};
}

std::vector<double> gene_scores(const std::vector<RegionReport>& reports,
                                const std::vector<ChromosomeSpan>& spans) {
  std::map<std::string, const ChromosomeSpan*> by_name;
  int total = 0;
  for (const ChromosomeSpan& s : spans) {
    by_name[s.name] = &s;
    total = std::max(total, s.first + s.count);
  }
  std::vector<double> scores(total, 1.0);
  for (const RegionReport& r : reports) {
    auto it = by_name.find(r.chromosome);
    if (it == by_name.end() || r.end > it->second->count) {
      throw Error(ErrorCode::GridMismatch, "region on chromosome " + r.chromosome + " is off the gene grid");
    }
    const double score = r.testable ? r.p_value : 1.0;
    for (int g = r.begin; g < r.end; ++g) scores[it->second->first + g] = score;
  }
  return scores;
}

}  // namespace blockcorr
