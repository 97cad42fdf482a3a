#include "commands.hpp"

#include "blockcorr/chisq.hpp"
#include "blockcorr/correct.hpp"
#include "blockcorr/io.hpp"
#include "blockcorr/simulate.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

namespace blockcorr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, message);
}

void require_file(const std::string& path, const char* flag) {
  require(!path.empty(), std::string(flag) + " is required");
  require(fs::exists(path), std::string(flag) + ": no such file " + path);
}

std::string out_path(const RunConfig& c, const std::string& name) {
  return (fs::path(c.out) / name).string();
}

json manifest(const RunConfig& c) {
  json cfg{{"input", c.input},
           {"annotation", c.annotation},
           {"covariate", c.covariate},
           {"segments", c.segments},
           {"scenario", c.scenario},
           {"truth", c.truth},
           {"calls", c.calls},
           {"transpose", c.transpose},
           {"S", c.threshold},
           {"kmax", c.kmax},
           {"min_length", c.min_length},
           {"rule", c.rule},
           {"alpha", c.alpha},
           {"adjust", c.adjust},
           {"rho0", c.rho0 ? json(*c.rho0) : json(nullptr)},
           {"mode", c.mode},
           {"half_width", c.half_width},
           {"n", c.n},
           {"rho1", c.rho1},
           {"chromosomes", c.chromosome_count},
           {"genes", c.genes},
           {"varying", c.varying},
           {"n_values", c.n_values},
           {"p_values", c.p_values},
           {"alphas", c.alphas},
           {"rho_step", c.rho_step}};
  return json{{"tool", "blockcorr"},
              {"version", kVersion},
              {"command", c.command},
              {"seed", c.seed},
              {"config", cfg}};
}

void write_manifest(const RunConfig& c) {
  io::write_file(out_path(c, "manifest.json"), manifest(c).dump(2) + "\n");
}

SegmentOptions segment_options(const RunConfig& c) {
  SegmentOptions o;
  o.threshold = c.threshold;
  o.kmax = c.kmax;
  o.min_length = c.min_length;
  o.rule = c.rule == "smallest" ? SelectionRule::SmallestQualifying : SelectionRule::LargestQualifying;
  return o;
}

Adjustment adjustment(const std::string& name) {
  if (name == "bonferroni") return Adjustment::Bonferroni;
  if (name == "none") return Adjustment::None;
  return Adjustment::BenjaminiHochberg;
}

GenomeLayout load_layout(const RunConfig& c) {
  require_file(c.input, "--input");
  const ExpressionMatrix matrix = io::read_expression(c.input, c.transpose);
  std::vector<GeneLocus> annotation;
  if (!c.annotation.empty()) {
    require_file(c.annotation, "--annotation");
    annotation = io::read_annotation(c.annotation);
  }
  return arrange_by_chromosome(matrix, annotation);
}

int cmd_segment(const RunConfig& c) {
  const GenomeLayout layout = load_layout(c);
  const std::vector<ChromosomeFit> fits = segment_genome(layout, segment_options(c));
  std::ostringstream tsv;
  io::write_segments(tsv, fits);
  io::write_file(out_path(c, "segments.tsv"), tsv.str());
  if (c.json) io::write_file(out_path(c, "segments.json"), io::segments_json(fits));
  if (c.trace) {
    std::ostringstream tr;
    io::write_trace(tr, fits);
    io::write_file(out_path(c, "selection.tsv"), tr.str());
  }
  write_manifest(c);
  return kExitOk;
}

int cmd_test(const RunConfig& c) {
  const GenomeLayout layout = load_layout(c);
  std::vector<ChromosomeFit> fits;
  if (!c.segments.empty()) {
    require_file(c.segments, "--segments");
    fits = fits_from_regions(layout, io::read_segments(c.segments));
  } else {
    fits = segment_genome(layout, segment_options(c));
  }
  TestOptions options;
  options.rho0 = c.rho0;
  options.adjustment = adjustment(c.adjust);
  options.alpha = c.alpha;
  const std::vector<RegionReport> reports = test_genome(fits, options);
  std::ostringstream tsv;
  io::write_regions(tsv, reports);
  io::write_file(out_path(c, "regions.tsv"), tsv.str());
  if (c.json) io::write_file(out_path(c, "regions.json"), io::regions_json(reports));
  write_manifest(c);
  return kExitOk;
}

int cmd_correct(const RunConfig& c) {
  require_file(c.annotation, "--annotation");
  require_file(c.covariate, "--covariate");
  const GenomeLayout layout = load_layout(c);
  CorrectionOptions options;
  options.mode = c.mode == "per-gene" ? CorrectionMode::PerGene : CorrectionMode::Pooled;
  options.half_width = c.half_width;
  options.segmentation.threshold = c.threshold;
  options.segmentation.rule =
      c.rule == "smallest" ? SelectionRule::SmallestQualifying : SelectionRule::LargestQualifying;
  const GenomeCorrection result = correct_genome(layout, io::read_covariates(c.covariate), options);
  io::write_expression(out_path(c, "corrected.tsv"), result.corrected);

  json sidecar{{"mode", c.mode}, {"chromosomes", json::array()}};
  for (const ChromosomeCorrection& chr : result.chromosomes) {
    json entry{{"chromosome", chr.chromosome}, {"degenerate_covariate", chr.degenerate}};
    if (options.mode == CorrectionMode::Pooled) {
      entry["beta0"] = chr.coefficients(0, 0);
      entry["beta1"] = chr.coefficients(0, 1);
    } else {
      json betas = json::array();
      for (Eigen::Index j = 0; j < chr.coefficients.rows(); ++j) {
        betas.push_back({chr.coefficients(j, 0), chr.coefficients(j, 1)});
      }
      entry["beta_per_gene"] = std::move(betas);
    }
    entry["alignment"] = {{"single", chr.source_counts[0]},
                          {"averaged", chr.source_counts[1]},
                          {"interpolated", chr.source_counts[2]},
                          {"extended", chr.source_counts[3]}};
    json patients = json::array();
    for (const CovariateFit& fit : chr.fits) {
      json bps = json::array();
      for (int k = 1; k < fit.segments(); ++k) bps.push_back(fit.positions[fit.breakpoints[k]]);
      patients.push_back({{"patient", fit.patient},
                          {"segments", fit.segments()},
                          {"breakpoint_positions", bps},
                          {"breakpoint_probes", std::vector<int>(fit.breakpoints.begin() + 1,
                                                                 fit.breakpoints.end() - 1)},
                          {"means", fit.means}});
    }
    entry["patients"] = std::move(patients);
    sidecar["chromosomes"].push_back(std::move(entry));
  }
  io::write_file(out_path(c, "correction.json"), sidecar.dump(2) + "\n");
  write_manifest(c);
  return kExitOk;
}

int cmd_simulate(const RunConfig& c) {
  ScenarioSpec spec;
  if (!c.scenario.empty()) {
    require_file(c.scenario, "--config");
    spec = io::read_scenario(c.scenario);
  } else if (c.varying) {
    spec = scenario_varying_background(c.n, c.rho1, c.seed, c.chromosome_count, c.genes);
  } else {
    spec = scenario_uniform_background(c.n, c.rho0.value_or(0.18), c.rho1, c.seed,
                                       c.chromosome_count, c.genes);
  }
  const SimulatedData data = generate(spec);
  io::write_expression(out_path(c, "expression.tsv"), data.matrix);
  io::write_annotation(out_path(c, "annotation.tsv"), data.annotation);
  std::ostringstream truth;
  io::write_truth(truth, spec, data);
  io::write_file(out_path(c, "truth.tsv"), truth.str());
  io::write_file(out_path(c, "scenario.json"), io::scenario_json(spec));
  write_manifest(c);
  return kExitOk;
}

int cmd_evaluate(const RunConfig& c) {
  require_file(c.annotation, "--annotation");
  require(!c.truth.empty() && c.truth.size() == c.calls.size(),
          "--truth and --calls must be given the same number of times");
  std::vector<GeneLocus> loci = io::read_annotation(c.annotation);
  std::stable_sort(loci.begin(), loci.end(), [](const GeneLocus& a, const GeneLocus& b) {
    if (a.chromosome != b.chromosome) return chromosome_less(a.chromosome, b.chromosome);
    return a.start < b.start;
  });
  std::map<std::string, int> index;
  std::vector<int> chromosome_of;
  for (std::size_t g = 0; g < loci.size(); ++g) {
    index[loci[g].id] = static_cast<int>(g);
    const bool fresh = g == 0 || loci[g].chromosome != loci[g - 1].chromosome;
    chromosome_of.push_back(chromosome_of.empty() ? 0 : chromosome_of.back() + (fresh ? 1 : 0));
  }
  auto locate = [&](const std::string& chr, const std::string& b, const std::string& e) {
    auto ib = index.find(b);
    auto ie = index.find(e);
    if (ib == index.end() || ie == index.end() || ie->second < ib->second ||
        loci[ib->second].chromosome != chr || loci[ie->second].chromosome != chr) {
      throw Error(ErrorCode::GridMismatch, "region " + b + ".." + e + " is not on the annotated gene grid");
    }
    return std::pair<int, int>{ib->second, ie->second + 1};
  };

  std::ostringstream summary;
  std::ostringstream roc;
  summary << "replicate\tgene_auc\tregion_auc\n";
  roc << "replicate\tlevel\tthreshold\ttpr\tfpr\n";
  double gene_sum = 0.0;
  double region_sum = 0.0;
  for (std::size_t r = 0; r < c.truth.size(); ++r) {
    require_file(c.truth[r], "--truth");
    require_file(c.calls[r], "--calls");
    std::vector<int> label(loci.size(), -1);
    for (const io::TruthRegion& t : io::read_truth(c.truth[r])) {
      const auto [b, e] = locate(t.chromosome, t.start_gene, t.end_gene);
      for (int g = b; g < e; ++g) label[g] = t.h1 ? 1 : 0;
    }
    if (std::find(label.begin(), label.end(), -1) != label.end()) {
      throw Error(ErrorCode::GridMismatch, "truth file " + c.truth[r] + " does not cover every gene");
    }
    std::vector<double> scores(loci.size(), 1.0);
    for (const io::CallRegion& call : io::read_calls(c.calls[r])) {
      const auto [b, e] = locate(call.chromosome, call.start_gene, call.end_gene);
      for (int g = b; g < e; ++g) scores[g] = call.score;
    }
    const std::vector<bool> truth(label.begin(), label.end());
    const EvalResult result = evaluate(truth, scores, chromosome_of);
    summary << r + 1 << '\t' << io::format_real(result.gene_level.auc) << '\t'
            << io::format_real(result.region_level.auc) << '\n';
    for (const auto& [level, curve] : {std::pair{"gene", &result.gene_level},
                                       std::pair{"region", &result.region_level}}) {
      for (const RocPoint& pt : curve->points) {
        roc << r + 1 << '\t' << level << '\t' << io::format_pvalue(pt.threshold) << '\t'
            << io::format_real(pt.tpr) << '\t' << io::format_real(pt.fpr) << '\n';
      }
    }
    gene_sum += result.gene_level.auc;
    region_sum += result.region_level.auc;
  }
  const double reps = static_cast<double>(c.truth.size());
  summary << "mean\t" << io::format_real(gene_sum / reps) << '\t' << io::format_real(region_sum / reps) << '\n';
  io::write_file(out_path(c, "eval.tsv"), summary.str());
  io::write_file(out_path(c, "roc.tsv"), roc.str());
  write_manifest(c);
  return kExitOk;
}

int cmd_power(const RunConfig& c) {
  const double rho0 = c.rho0.value_or(0.15);
  const std::vector<double> alphas = c.alphas.empty() ? std::vector<double>{0.05, 0.005, 0.0005} : c.alphas;

  // Rows: (panel, n, p). Default is the width panel at n = 58 and the
  // cohort panel at width 5.
  std::vector<std::tuple<std::string, int, int>> rows;
  if (c.n_values.empty() && c.p_values.empty()) {
    for (int p : {3, 5, 10, 20}) rows.emplace_back("width", 58, p);
    for (int n : {10, 50, 200, 1000}) rows.emplace_back("cohort", n, 5);
  } else {
    const std::vector<int> ns = c.n_values.empty() ? std::vector<int>{58} : c.n_values;
    const std::vector<int> ps = c.p_values.empty() ? std::vector<int>{5} : c.p_values;
    for (int n : ns) {
      for (int p : ps) rows.emplace_back("grid", n, p);
    }
  }
  std::vector<double> rhos{rho0};
  const int steps = static_cast<int>(std::floor(1.0 / c.rho_step + 1e-9));
  for (int k = 0; k < steps; ++k) {
    const double r = k / static_cast<double>(steps);
    if (r > rho0 && r < 1.0) rhos.push_back(r);
  }

  std::ostringstream out;
  out << "panel\tn\tp\trho0\trho\talpha\tpower\n";
  for (const auto& [panel, n, p] : rows) {
    require(n >= 3 && p >= 1, "power grid needs n >= 3 and p >= 1");
    for (double alpha : alphas) {
      for (double rho : rhos) {
        out << panel << '\t' << n << '\t' << p << '\t' << io::format_real(rho0) << '\t'
            << io::format_real(rho) << '\t' << io::format_real(alpha) << '\t'
            << io::format_pvalue(power(n, p, rho, rho0, alpha)) << '\n';
      }
    }
  }
  io::write_file(out_path(c, "power.tsv"), out.str());
  write_manifest(c);
  return kExitOk;
}

}  // namespace

void validate(const RunConfig& c) {
  require(c.threshold > 0.0, "--S must be positive");
  require(c.alpha > 0.0 && c.alpha < 1.0, "--alpha must lie in (0, 1)");
  require(c.kmax >= 0, "--kmax must be non-negative");
  require(c.min_length >= 1, "--min-length must be at least 1");
  require(c.rule == "largest" || c.rule == "smallest", "--rule must be largest or smallest");
  require(c.adjust == "bh" || c.adjust == "bonferroni" || c.adjust == "none",
          "--adjust must be bh, bonferroni or none");
  require(c.mode == "pooled" || c.mode == "per-gene", "--mode must be pooled or per-gene");
  require(c.half_width >= 0.0, "--half-width must be non-negative");
  require(c.rho_step > 0.0 && c.rho_step < 1.0, "--rho-step must lie in (0, 1)");
  if (c.rho0) require(*c.rho0 > -1.0 && *c.rho0 < 1.0, "--rho0 must lie in (-1, 1)");
  for (double a : c.alphas) require(a > 0.0 && a < 1.0, "--alphas must lie in (0, 1)");
}

int run(const RunConfig& c) {
  try {
    validate(c);
    fs::create_directories(c.out);
    if (c.command == "segment") return cmd_segment(c);
    if (c.command == "test") return cmd_test(c);
    if (c.command == "correct") return cmd_correct(c);
    if (c.command == "simulate") return cmd_simulate(c);
    if (c.command == "evaluate") return cmd_evaluate(c);
    if (c.command == "power") return cmd_power(c);
    throw Error(ErrorCode::InvalidArgument, "unknown command " + c.command);
  } catch (const Error& e) {
    std::cerr << "blockcorr " << c.command << ": " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::Parse:
      case ErrorCode::MissingValue:
      case ErrorCode::ConstantColumn:
        return kExitIngestion;
      default:
        return kExitValidation;
    }
  } catch (const fs::filesystem_error& e) {
    std::cerr << "blockcorr " << c.command << ": " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace blockcorr::cli
