#include "blockcorr/correct.hpp"
#include "blockcorr/pipeline.hpp"
#include "blockcorr/sigtest.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace blockcorr {
namespace {

CovariateSeries series(std::vector<double> values) {
  CovariateSeries s;
  s.patient = "p1";
  for (std::size_t t = 0; t < values.size(); ++t) s.positions.push_back(100.0 * (t + 1));
  s.values = std::move(values);
  return s;
}

TEST(SegmentCovariate, ConstantSeriesIsOneSegment) {
  const CovariateFit fit = segment_covariate(series(std::vector<double>(40, 2.5)));
  EXPECT_EQ(fit.segments(), 1);
  EXPECT_DOUBLE_EQ(fit.means[0], 2.5);
}

int step_hits(SelectionRule rule) {
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.1);
    std::vector<double> v(100);
    for (int t = 0; t < 100; ++t) v[t] = (t < 50 ? 0.0 : 2.0) + noise(rng);
    CovariateOptions opt;
    opt.rule = rule;
    const CovariateFit fit = segment_covariate(series(v), opt);
    if (fit.segments() == 2 && std::abs(fit.breakpoints[1] - 50) <= 2) ++hits;
  }
  return hits;
}

TEST(SegmentCovariate, StepFoundWithinTwoProbes) {
  EXPECT_GE(step_hits(SelectionRule::LargestQualifying), 19);
}

TEST(SegmentCovariate, StepFoundWithinTwoProbesSmallestRule) {
  EXPECT_GE(step_hits(SelectionRule::SmallestQualifying), 19);
}

TEST(SegmentCovariate, TwoProbesTwoSegments) {
  CovariateOptions opt;
  opt.fixed_k = 2;
  const CovariateFit fit = segment_covariate(series({1.0, 4.0}), opt);
  EXPECT_EQ(fit.breakpoints, (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(fit.means, (std::vector<double>{1.0, 4.0}));
}

TEST(SegmentCovariate, MeansAreSegmentAverages) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::vector<double> v(90);
  for (int t = 0; t < 90; ++t) v[t] = (t < 30 ? 1.0 : t < 60 ? -1.0 : 0.5) + noise(rng);
  const CovariateFit fit = segment_covariate(series(v));
  for (int s = 0; s < fit.segments(); ++s) {
    double total = 0.0;
    for (int t = fit.breakpoints[s]; t < fit.breakpoints[s + 1]; ++t) total += v[t];
    EXPECT_NEAR(fit.means[s], total / (fit.breakpoints[s + 1] - fit.breakpoints[s]), 1e-12);
  }
  for (int t = 0; t < 90; ++t) {
    const int s = fit.segment_of(t);
    EXPECT_GE(t, fit.breakpoints[s]);
    EXPECT_LT(t, fit.breakpoints[s + 1]);
  }
}

TEST(SegmentCovariate, TooFewProbes) {
  try {
    segment_covariate(series({1.0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewProbes);
  }
}

CovariateFit manual_fit(std::vector<double> positions, std::vector<int> breakpoints,
                        std::vector<double> means) {
  CovariateFit fit;
  fit.patient = "p1";
  fit.values.assign(positions.size(), 0.0);
  fit.positions = std::move(positions);
  fit.breakpoints = std::move(breakpoints);
  fit.means = std::move(means);
  return fit;
}

TEST(Align, SingleProbe) {
  const std::vector<CovariateFit> fits = {manual_fit({10, 50, 90}, {0, 3}, {1.5})};
  const std::vector<GeneInterval> genes = {{45, 55}};
  const AlignedCovariate a = align_to_genes(fits, genes);
  EXPECT_EQ(a.x(0, 0), 1.5);
  EXPECT_EQ(a.source_at(0, 0), AlignSource::SingleProbe);
}

TEST(Align, AverageOfSegmentMeans) {
  const std::vector<CovariateFit> fits = {manual_fit({10, 20, 30, 40}, {0, 2, 4}, {1.0, 3.0})};
  const std::vector<GeneInterval> genes = {{15, 35}};
  const AlignedCovariate a = align_to_genes(fits, genes);
  EXPECT_EQ(a.x(0, 0), 2.0);
  EXPECT_EQ(a.source_at(0, 0), AlignSource::Averaged);
}

TEST(Align, InterpolatesBetweenFlanks) {
  const std::vector<CovariateFit> fits = {manual_fit({10, 30}, {0, 1, 2}, {0.0, 2.0})};
  const std::vector<GeneInterval> genes = {{18, 22}};
  const AlignedCovariate a = align_to_genes(fits, genes);
  EXPECT_DOUBLE_EQ(a.x(0, 0), 1.0);
  EXPECT_EQ(a.source_at(0, 0), AlignSource::Interpolated);
}

TEST(Align, ExtendsAtChromosomeEnds) {
  const std::vector<CovariateFit> fits = {manual_fit({10, 30}, {0, 1, 2}, {-1.0, 2.0})};
  const std::vector<GeneInterval> genes = {{1, 5}, {40, 45}};
  const AlignedCovariate a = align_to_genes(fits, genes);
  EXPECT_EQ(a.x(0, 0), -1.0);
  EXPECT_EQ(a.x(0, 1), 2.0);
  EXPECT_EQ(a.source_at(0, 0), AlignSource::Extended);
}

TEST(Align, HalfWidthWindow) {
  const std::vector<CovariateFit> fits = {manual_fit({10, 30}, {0, 1, 2}, {4.0, 8.0})};
  const std::vector<GeneInterval> genes = {{28, 28}};
  EXPECT_EQ(align_to_genes(fits, genes, 0.0).source_at(0, 0), AlignSource::Interpolated);
  const AlignedCovariate wide = align_to_genes(fits, genes, 3.0);
  EXPECT_EQ(wide.source_at(0, 0), AlignSource::SingleProbe);
  EXPECT_EQ(wide.x(0, 0), 8.0);
}

TEST(Align, TotalOverRandomLayouts) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<CovariateFit> fits;
    for (int i = 0; i < 4; ++i) {
      std::vector<double> pos(15);
      for (double& x : pos) x = u(rng);
      std::sort(pos.begin(), pos.end());
      std::vector<double> vals(15);
      for (double& x : vals) x = u(rng) / 100;
      CovariateSeries s{"p", pos, vals};
      fits.push_back(segment_covariate(s));
    }
    std::vector<GeneInterval> genes;
    for (int j = 0; j < 30; ++j) {
      const double a = u(rng);
      genes.push_back({a, a + 20});
    }
    const AlignedCovariate a = align_to_genes(fits, genes);
    EXPECT_TRUE(a.x.allFinite());
    EXPECT_EQ(a.source.size(), 4u * 30u);
  }
}

TEST(Align, NoProbes) {
  const std::vector<CovariateFit> fits = {manual_fit({}, {0}, {})};
  const std::vector<GeneInterval> genes = {{1, 2}};
  try {
    align_to_genes(fits, genes, 0.0, "chr4");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoProbesOnChromosome);
    EXPECT_NE(std::string(e.what()).find("chr4"), std::string::npos);
  }
}

TEST(Correct, PerfectLinearFit) {
  std::mt19937_64 rng(43);
  const Eigen::MatrixXd x = testing::normal_matrix(10, 6, rng);
  const Eigen::MatrixXd y = (2.0 + 3.0 * x.array()).matrix();
  const std::vector<Eigen::MatrixXd> xs = {x};
  const CorrectionResult pooled = correct_expression(ExpressionMatrix(y), xs);
  EXPECT_LT(pooled.residuals.values().cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(pooled.coefficients(0, 0), 2.0, 1e-12);
  EXPECT_NEAR(pooled.coefficients(0, 1), 3.0, 1e-12);
  const CorrectionResult per_gene = correct_expression(ExpressionMatrix(y), xs, CorrectionMode::PerGene);
  EXPECT_LT(per_gene.residuals.values().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Correct, ConstantCovariateCentersSignal) {
  std::mt19937_64 rng(44);
  const Eigen::MatrixXd y = testing::normal_matrix(12, 5, rng);
  const std::vector<Eigen::MatrixXd> xs = {Eigen::MatrixXd::Constant(12, 5, 0.7)};
  const CorrectionResult r = correct_expression(ExpressionMatrix(y), xs);
  EXPECT_TRUE(r.degenerate);
  EXPECT_LT((r.residuals.values().array() - (y.array() - y.mean())).abs().maxCoeff(), 1e-12);
}

TEST(Correct, DimensionMismatch) {
  const std::vector<Eigen::MatrixXd> xs = {Eigen::MatrixXd::Zero(4, 3)};
  EXPECT_THROW(correct_expression(ExpressionMatrix(Eigen::MatrixXd::Random(4, 2)), xs), Error);
}

TEST(CorrectProperty, NormalEquations) {
  std::mt19937_64 rng(45);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd x = testing::normal_matrix(20, 15, rng);
    const Eigen::MatrixXd x2 = testing::normal_matrix(20, 15, rng);
    const Eigen::MatrixXd y = (0.5 * x + testing::normal_matrix(20, 15, rng)).array() + 1.0;
    const std::vector<Eigen::MatrixXd> xs = {x, x2};
    const Eigen::MatrixXd r = correct_expression(ExpressionMatrix(y), xs).residuals.values();
    EXPECT_LT(std::abs(r.mean()), 1e-10);
    EXPECT_LT(std::abs((r.array() * x.array()).mean()), 1e-10);
    EXPECT_LT(std::abs((r.array() * x2.array()).mean()), 1e-10);
    const Eigen::MatrixXd rg = correct_expression(ExpressionMatrix(y), xs, CorrectionMode::PerGene).residuals.values();
    for (int j = 0; j < 15; ++j) {
      EXPECT_LT(std::abs(rg.col(j).mean()), 1e-10);
      EXPECT_LT(std::abs(rg.col(j).dot(x.col(j))), 1e-9);
    }
  }
}

TEST(CorrectProperty, MatchesIndependentOls) {
  std::mt19937_64 rng(46);
  const Eigen::MatrixXd x = testing::normal_matrix(15, 8, rng);
  const Eigen::MatrixXd y = 0.3 * x + testing::normal_matrix(15, 8, rng);
  const std::vector<Eigen::MatrixXd> xs = {x};
  const CorrectionResult r = correct_expression(ExpressionMatrix(y), xs);
  // Design with an explicit intercept column, solved by normal equations.
  Eigen::MatrixXd design(x.size(), 2);
  design.col(0).setOnes();
  design.col(1) = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), y.size());
  const Eigen::VectorXd beta = (design.transpose() * design).ldlt().solve(design.transpose() * yv);
  EXPECT_NEAR(r.coefficients(0, 0), beta(0), 1e-9);
  EXPECT_NEAR(r.coefficients(0, 1), beta(1), 1e-9);
}

// Covariate-driven blocks lose their excess correlation after regression while
// a block that does not depend on the covariate keeps it.
TEST(CorrectMonteCarlo, CovariateBlocksRemovedPlantedBlockKept) {
  double cnv_after = 0.0;
  double cnv_before = 0.0;
  double planted = 0.0;
  int lowered = 0;
  const int reps = 20;
  for (std::uint64_t seed = 1; seed <= reps; ++seed) {
    const testing::CovariateScenario sc = testing::covariate_scenario(seed);
    const std::vector<Eigen::MatrixXd> xs = {sc.x};
    const ExpressionMatrix corrected = standardize(correct_expression(sc.expression, xs).residuals);
    double block_mean = 0.0;
    double block_before = 0.0;
    for (const auto& [a, b] : sc.cnv_blocks) {
      block_mean += testing::mean_pairwise_correlation(corrected.values(), a, b);
      block_before += testing::mean_pairwise_correlation(sc.expression.values(), a, b);
    }
    cnv_after += block_mean / sc.cnv_blocks.size();
    cnv_before += block_before / sc.cnv_blocks.size();
    const GramPrefix gram(corrected);
    const int w = sc.planted.second - sc.planted.first;
    planted += rho_hat(gram.block_sum(sc.planted.first, sc.planted.second), w);
    if (estimate_rho0(corrected) < estimate_rho0(sc.expression)) ++lowered;
  }
  EXPECT_GT(cnv_before / reps, 0.35);
  EXPECT_LT(cnv_after / reps, 0.15 + 0.05);
  EXPECT_NEAR(planted / reps, 0.7, 0.05);
  EXPECT_GE(lowered, 18);
}

TEST(CorrectGenome, ProbeLevelChainRecoversSlope) {
  const testing::CovariateScenario sc = testing::covariate_scenario(7);
  const GenomeLayout layout = arrange_by_chromosome(sc.expression, sc.annotation);
  const GenomeCorrection gc = correct_genome(layout, sc.probes, {});
  ASSERT_EQ(gc.chromosomes.size(), 1u);
  EXPECT_NEAR(gc.chromosomes[0].coefficients(0, 1), 0.8, 0.1);
  EXPECT_EQ(gc.corrected.p(), sc.expression.p());
  // Fitted probe levels track the noiseless covariate.
  const auto& fits = gc.chromosomes[0].fits;
  double err = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    for (int t = 0; t < fits[i].probes(); ++t) {
      const double pos = fits[i].positions[t];
      double truth = 0.0;
      for (const auto& [a, b] : sc.cnv_blocks) {
        if (pos >= 10000.0 * (a + 1) - 2500.0 && pos <= 10000.0 * b + 5000.0 + 2500.0) {
          truth = sc.x(static_cast<Eigen::Index>(i), a);
        }
      }
      err += std::abs(fits[i].fitted(t) - truth);
      ++count;
    }
  }
  EXPECT_LT(err / count, 0.1);
}

TEST(CorrectGenome, PatientMismatchListsIdentifiers) {
  const testing::CovariateScenario sc = testing::covariate_scenario(8, 6);
  std::vector<CovariateRecord> probes;
  for (CovariateRecord r : sc.probes) {
    if (r.patient == "p2") r.patient = "zz9";
    probes.push_back(r);
  }
  const GenomeLayout layout = arrange_by_chromosome(sc.expression, sc.annotation);
  try {
    correct_genome(layout, probes, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PatientMismatch);
    EXPECT_NE(std::string(e.what()).find("zz9"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("p2"), std::string::npos);
  }
}

}  // namespace
}  // namespace blockcorr
