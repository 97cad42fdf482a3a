#include "blockcorr/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <thread>

namespace blockcorr {

void parallel_for(int count, const std::function<void(int)>& fn) {
  const int workers = std::clamp(static_cast<int>(std::thread::hardware_concurrency()), 1,
                                 std::max(1, count));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> guard(failure_lock);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

ExpressionMatrix chromosome_matrix(const GenomeLayout& layout, const ChromosomeSpan& span) {
  std::vector<double> positions;
  positions.reserve(span.count);
  for (int j = 0; j < span.count; ++j) positions.push_back(layout.loci[span.first + j].start);
  const ExpressionMatrix sub = layout.matrix.columns(span.first, span.count);
  return ExpressionMatrix(sub.values(), sub.gene_ids(), sub.patient_ids(), std::move(positions),
                          sub.standardized());
}

}  // namespace

std::vector<ChromosomeFit> segment_genome(const GenomeLayout& layout, const SegmentOptions& options) {
  const int count = static_cast<int>(layout.chromosomes.size());
  std::vector<std::optional<ChromosomeFit>> slots(count);
  parallel_for(count, [&](int c) {
    const ChromosomeSpan& span = layout.chromosomes[c];
    ExpressionMatrix z = standardize(chromosome_matrix(layout, span));
    SegmentResult fit = segment_chromosome(z, options);
    slots[c].emplace(ChromosomeFit{span, std::move(z), std::move(fit)});
  });
  std::vector<ChromosomeFit> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::vector<RegionReport> test_genome(const std::vector<ChromosomeFit>& fits,
                                      const TestOptions& options) {
  std::vector<RegionReport> reports;
  for (const ChromosomeFit& f : fits) {
    double rho0 = std::numeric_limits<double>::quiet_NaN();
    if (options.rho0) {
      rho0 = *options.rho0;
    } else if (f.standardized.p() >= 2) {
      rho0 = estimate_rho0(f.standardized);
    }
    std::vector<RegionReport> part =
        test_segments(f.standardized, f.fit.segmentation, rho0, f.span.name);
    reports.insert(reports.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
  }
  finalize_reports(reports, options.adjustment, options.alpha);
  return reports;
}

std::vector<ChromosomeFit> fits_from_regions(const GenomeLayout& layout,
                                             const std::vector<RegionRef>& regions) {
  std::map<std::string, std::vector<const RegionRef*>> by_chromosome;
  for (const RegionRef& r : regions) by_chromosome[r.chromosome].push_back(&r);

  std::vector<ChromosomeFit> out;
  for (const ChromosomeSpan& span : layout.chromosomes) {
    auto it = by_chromosome.find(span.name);
    if (it == by_chromosome.end()) {
      throw Error(ErrorCode::InvalidArgument, "segmentation has no regions for chromosome " + span.name);
    }
    ExpressionMatrix z = standardize(chromosome_matrix(layout, span));
    std::map<std::string, int> index;
    for (int j = 0; j < span.count; ++j) index[z.gene_ids()[j]] = j;

    std::vector<int> breakpoints{0};
    for (const RegionRef* r : it->second) {
      auto b = index.find(r->start_gene);
      auto e = index.find(r->end_gene);
      if (b == index.end() || e == index.end()) {
        throw Error(ErrorCode::InvalidArgument, "region " + r->start_gene + ".." + r->end_gene +
                                                    " names a gene not on chromosome " + span.name);
      }
      if (b->second != breakpoints.back() || e->second < b->second) {
        throw Error(ErrorCode::InvalidArgument,
                    "regions of chromosome " + span.name + " do not tile it in order at gene " +
                        r->start_gene);
      }
      breakpoints.push_back(e->second + 1);
    }
    if (breakpoints.back() != span.count) {
      throw Error(ErrorCode::InvalidArgument, "regions of chromosome " + span.name + " stop before its last gene");
    }
    const GramPrefix gram(z);
    SegmentResult fit;
    fit.segmentation = make_segmentation(gram, std::move(breakpoints));
    fit.trace.chosen_k = fit.segmentation.segments();
    out.push_back({span, std::move(z), std::move(fit)});
    by_chromosome.erase(it);
  }
  if (!by_chromosome.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                "segmentation names unknown chromosome " + by_chromosome.begin()->first);
  }
  return out;
}

GenomeCorrection correct_genome(const GenomeLayout& layout,
                                const std::vector<CovariateRecord>& covariates,
                                const CorrectionOptions& options) {
  const ExpressionMatrix& matrix = layout.matrix;
  if (matrix.patient_ids().empty()) {
    throw Error(ErrorCode::PatientMismatch, "expression matrix carries no patient identifiers");
  }

  // chromosome -> patient -> (position, value)
  std::map<std::string, std::map<std::string, std::vector<std::pair<double, double>>>> tracks;
  std::set<std::string> covariate_patients;
  for (const CovariateRecord& r : covariates) {
    tracks[r.chromosome][r.patient].emplace_back(r.position, r.value);
    covariate_patients.insert(r.patient);
  }
  const std::set<std::string> expression_patients(matrix.patient_ids().begin(),
                                                  matrix.patient_ids().end());
  std::vector<std::string> unmatched;
  for (const std::string& p : expression_patients) {
    if (!covariate_patients.count(p)) unmatched.push_back(p);
  }
  for (const std::string& p : covariate_patients) {
    if (!expression_patients.count(p)) unmatched.push_back(p);
  }
  if (!unmatched.empty()) {
    std::string list;
    for (const std::string& p : unmatched) list += (list.empty() ? "" : ", ") + p;
    throw Error(ErrorCode::PatientMismatch, "unmatched patient identifiers: " + list);
  }

  const int chromosomes = static_cast<int>(layout.chromosomes.size());
  std::vector<std::optional<ChromosomeCorrection>> slots(chromosomes);
  Eigen::MatrixXd corrected(matrix.n(), matrix.p());

  parallel_for(chromosomes, [&](int c) {
    const ChromosomeSpan& span = layout.chromosomes[c];
    ChromosomeCorrection out;
    out.chromosome = span.name;
    auto chr = tracks.find(span.name);
    for (int i = 0; i < matrix.n(); ++i) {
      const std::string& patient = matrix.patient_ids()[i];
      if (chr == tracks.end() || !chr->second.count(patient)) {
        throw Error(ErrorCode::NoProbesOnChromosome,
                    "patient " + patient + " has no covariate probes on chromosome " + span.name);
      }
      std::vector<std::pair<double, double>> probes = chr->second.at(patient);
      std::stable_sort(probes.begin(), probes.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      CovariateSeries series{patient, {}, {}};
      for (const auto& [pos, value] : probes) {
        series.positions.push_back(pos);
        series.values.push_back(value);
      }
      out.fits.push_back(segment_covariate(series, options.segmentation));
    }

    std::vector<GeneInterval> genes;
    for (int j = 0; j < span.count; ++j) {
      const GeneLocus& locus = layout.loci[span.first + j];
      genes.push_back({locus.start, std::max(locus.start, locus.end)});
    }
    const AlignedCovariate aligned = align_to_genes(out.fits, genes, options.half_width, span.name);
    out.source_counts.assign(4, 0);
    for (AlignSource s : aligned.source) ++out.source_counts[static_cast<int>(s)];

    const ExpressionMatrix sub = matrix.columns(span.first, span.count);
    const std::vector<Eigen::MatrixXd> x{aligned.x};
    CorrectionResult result = correct_expression(sub, x, options.mode);
    out.coefficients = result.coefficients;
    out.degenerate = result.degenerate;
    corrected.middleCols(span.first, span.count) = result.residuals.values();
    slots[c].emplace(std::move(out));
  });

  GenomeCorrection genome{ExpressionMatrix(std::move(corrected), matrix.gene_ids(),
                                           matrix.patient_ids()),
                          {}};
  for (auto& s : slots) genome.chromosomes.push_back(std::move(*s));
  return genome;
}

}  // namespace blockcorr
