#pragma once

#include "blockcorr/core.hpp"
#include "blockcorr/sigtest.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace blockcorr {

struct RegionSpec {
  int begin = 0;  // half-open gene range within the chromosome
  int end = 0;
  bool h1 = false;
};

struct ChromosomeSpec {
  std::string name;
  int genes = 0;
  double rho0 = 0.0;
  std::vector<RegionSpec> regions;  // tile [0, genes)
};

struct ScenarioSpec {
  int n = 58;
  double rho1 = 0.7;
  std::uint64_t seed = 1;
  std::vector<ChromosomeSpec> chromosomes;

  // Throws InvalidArgument / InvalidLoadings on a malformed spec.
  void validate() const;
};

inline constexpr int kDeskChromosomes = 5;
inline constexpr int kDeskGenes = 500;

// Alternating H0/H1 geometry: H0 lengths uniform on [20, 60], H1 lengths
// drawn from {3, 5, 10, 20, 40}. The geometry depends on the seed only.
std::vector<RegionSpec> alternating_regions(int genes, std::mt19937_64& rng);

// Same background on every chromosome.
ScenarioSpec scenario_uniform_background(int n, double rho0, double rho1, std::uint64_t seed,
                                         int chromosomes = kDeskChromosomes,
                                         int genes = kDeskGenes);

// Per-chromosome background drawn uniformly on [0.08, 0.28].
ScenarioSpec scenario_varying_background(int n, double rho1, std::uint64_t seed,
                                         int chromosomes = kDeskChromosomes,
                                         int genes = kDeskGenes);

struct SimulatedData {
  ExpressionMatrix matrix;
  std::vector<GeneLocus> annotation;  // aligned with matrix columns
  std::vector<ChromosomeSpan> chromosomes;
  std::vector<bool> h1;               // truth label per column
  std::vector<int> chromosome_of;     // chromosome index per column
};

// Latent-factor construction: a chromosome-wide factor with loading
// sqrt(rho0), one factor per H1 region with loading sqrt(rho1 - rho0) and
// unit-variance completion by independent noise. Correlations are rho1
// inside H1 regions and rho0 for every other pair on the chromosome.
SimulatedData generate(const ScenarioSpec& spec);

// n draws of an exchangeable width-dimensional Gaussian with unit variances
// and common correlation rho >= 0.
Eigen::MatrixXd compound_symmetry_sample(int n, int width, double rho, std::mt19937_64& rng);

struct RocPoint {
  double threshold = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
};

struct EvalCurve {
  std::vector<RocPoint> points;  // sorted by (fpr, tpr), including (0,0) and (1,1)
  double auc = 0.0;
};

struct EvalResult {
  EvalCurve gene_level;
  EvalCurve region_level;
};

// Genes with score <= threshold are called. An empty threshold list sweeps
// every distinct score.
EvalCurve gene_metrics(const std::vector<bool>& truth, const std::vector<double>& scores,
                       std::vector<double> thresholds = {});

// Each gene gets a (true/false x positive/negative) status; maximal runs of
// equal status within a chromosome are counted as one region.
EvalCurve region_metrics(const std::vector<bool>& truth, const std::vector<double>& scores,
                         const std::vector<int>& chromosome_of,
                         std::vector<double> thresholds = {});

EvalResult evaluate(const std::vector<bool>& truth, const std::vector<double>& scores,
                    const std::vector<int>& chromosome_of, std::vector<double> thresholds = {});

struct RegionCounts {
  int true_positive = 0;
  int false_positive = 0;
  int true_negative = 0;
  int false_negative = 0;
};

RegionCounts count_status_runs(const std::vector<bool>& truth, const std::vector<bool>& called,
                               const std::vector<int>& chromosome_of);

// Per-gene ranking score from region reports: the region's raw p-value, 1
// for untestable regions. `spans` gives the column offset of each
// chromosome named in the reports.
std::vector<double> gene_scores(const std::vector<RegionReport>& reports,
                                const std::vector<ChromosomeSpan>& spans);

}  // namespace blockcorr
