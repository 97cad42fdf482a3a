#include "commands.hpp"

#include <CLI11.hpp>

int main(int argc, char** argv) {
  using blockcorr::cli::RunConfig;
  CLI::App app{"Detects contiguous blocks of genes with elevated expression correlation"};
  app.require_subcommand(1);
  RunConfig config;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", config.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", config.seed, "Random seed recorded in the manifest")->capture_default_str();
    sub->add_flag("--json", config.json, "Also write JSON mirrors of tabular outputs");
  };
  auto add_input = [&](CLI::App* sub) {
    sub->add_option("--input", config.input, "Expression matrix (TSV/CSV, header of gene ids)");
    sub->add_option("--annotation", config.annotation, "Gene annotation: gene, chromosome, start[, end]");
    sub->add_flag("--transpose", config.transpose, "Input rows are genes instead of patients");
  };
  auto add_segmentation = [&](CLI::App* sub) {
    sub->add_option("--S", config.threshold, "Slope-change threshold")->capture_default_str();
    sub->add_option("--kmax", config.kmax, "Largest number of segments (0: automatic)")->capture_default_str();
    sub->add_option("--min-length", config.min_length, "Minimum segment length")->capture_default_str();
    sub->add_option("--rule", config.rule, "Selection rule: largest or smallest qualifying K")->capture_default_str();
  };
  auto add_testing = [&](CLI::App* sub) {
    sub->add_option("--alpha", config.alpha, "Significance level of adjusted p-values")->capture_default_str();
    sub->add_option("--adjust", config.adjust, "Multiple-testing adjustment: bh, bonferroni, none")->capture_default_str();
    sub->add_option("--rho0", config.rho0, "Fixed background correlation (default: estimated per chromosome)");
  };

  CLI::App* segment = app.add_subcommand("segment", "Segment the correlation structure per chromosome");
  add_common(segment);
  add_input(segment);
  add_segmentation(segment);
  segment->add_flag("--trace", config.trace, "Write the model-selection trace");

  CLI::App* test = app.add_subcommand("test", "Test segments against the background correlation");
  add_common(test);
  add_input(test);
  add_segmentation(test);
  add_testing(test);
  test->add_option("--segments", config.segments, "Segmentation TSV (default: segment first)");

  CLI::App* correct = app.add_subcommand("correct", "Regress a covariate out of the expression signal");
  add_common(correct);
  add_input(correct);
  correct->add_option("--covariate", config.covariate, "Covariate TSV: patient, chromosome, position, value");
  correct->add_option("--mode", config.mode, "Regression mode: pooled or per-gene")->capture_default_str();
  correct->add_option("--half-width", config.half_width, "Window around single-position genes")->capture_default_str();
  correct->add_option("--S", config.threshold, "Slope-change threshold for covariate segmentation")->capture_default_str();
  correct->add_option("--rule", config.rule, "Selection rule for covariate segmentation")->capture_default_str();

  CLI::App* simulate = app.add_subcommand("simulate", "Generate a synthetic cohort with known regions");
  add_common(simulate);
  simulate->add_option("--config", config.scenario, "Scenario JSON");
  simulate->add_option("--n", config.n, "Cohort size")->capture_default_str();
  simulate->add_option("--rho0", config.rho0, "Background correlation (default 0.18)");
  simulate->add_option("--rho1", config.rho1, "Correlation inside H1 regions")->capture_default_str();
  simulate->add_option("--chromosomes", config.chromosome_count, "Number of chromosomes")->capture_default_str();
  simulate->add_option("--genes", config.genes, "Genes per chromosome")->capture_default_str();
  simulate->add_flag("--varying", config.varying, "Draw the background per chromosome");

  CLI::App* evaluate = app.add_subcommand("evaluate", "Score region calls against a simulated truth");
  add_common(evaluate);
  evaluate->add_option("--annotation", config.annotation, "Gene annotation defining the gene grid");
  evaluate->add_option("--truth", config.truth, "Truth TSV (repeat per replicate)");
  evaluate->add_option("--calls", config.calls, "Region TSV with p_value column (repeat per replicate)");

  CLI::App* power = app.add_subcommand("power", "Tabulate the exact power of the region test");
  add_common(power);
  power->add_option("--rho0", config.rho0, "Background correlation (default 0.15)");
  power->add_option("--n-values", config.n_values, "Cohort sizes");
  power->add_option("--p-values", config.p_values, "Region widths");
  power->add_option("--alphas", config.alphas, "Nominal levels (default 0.05 0.005 0.0005)");
  power->add_option("--rho-step", config.rho_step, "Spacing of the correlation grid")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : blockcorr::cli::kExitValidation;
  }
  config.command = app.get_subcommands().front()->get_name();
  return blockcorr::cli::run(config);
}
