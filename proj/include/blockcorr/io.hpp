#pragma once

#include "blockcorr/core.hpp"
#include "blockcorr/pipeline.hpp"
#include "blockcorr/seglik.hpp"
#include "blockcorr/sigtest.hpp"
#include "blockcorr/simulate.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace blockcorr::io {

// Delimited text with a header row. Tabs are used when the header contains
// one, commas otherwise.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by any of the accepted names, or -1.
  int column(std::initializer_list<const char*> names) const;
};

Table read_table(const std::string& path);

double parse_number(const std::string& field, const std::string& context);

// Rows are patients and columns genes unless `transpose`. A leading column
// whose entries are all non-numeric holds the row identifiers.
ExpressionMatrix read_expression(const std::string& path, bool transpose = false);
void write_expression(const std::string& path, const ExpressionMatrix& matrix);

// Columns: gene (or gene_id/id), chromosome (or chrom/chr), start (or
// position/pos), optional end.
std::vector<GeneLocus> read_annotation(const std::string& path);
void write_annotation(const std::string& path, const std::vector<GeneLocus>& loci);

// Long format, columns: patient, chromosome, position, value.
std::vector<CovariateRecord> read_covariates(const std::string& path);

// Full-precision scientific rendering used for every p-value column.
std::string format_pvalue(double v);
std::string format_real(double v);

void write_segments(std::ostream& out, const std::vector<ChromosomeFit>& fits);
std::vector<RegionRef> read_segments(const std::string& path);
void write_trace(std::ostream& out, const std::vector<ChromosomeFit>& fits);
void write_regions(std::ostream& out, const std::vector<RegionReport>& reports);

std::string segments_json(const std::vector<ChromosomeFit>& fits);
std::string regions_json(const std::vector<RegionReport>& reports);

// Truth table for simulated data: chromosome, start_gene, end_gene, label.
void write_truth(std::ostream& out, const ScenarioSpec& spec, const SimulatedData& data);

struct TruthRegion {
  std::string chromosome;
  std::string start_gene;
  std::string end_gene;
  bool h1 = false;
};
std::vector<TruthRegion> read_truth(const std::string& path);

struct CallRegion {
  std::string chromosome;
  std::string start_gene;
  std::string end_gene;
  double score = 1.0;
};
// Reads a region table; the score is the p_value column ("NA" counts as 1).
std::vector<CallRegion> read_calls(const std::string& path);

ScenarioSpec read_scenario(const std::string& path);
std::string scenario_json(const ScenarioSpec& spec);

void write_file(const std::string& path, const std::string& content);

}  // namespace blockcorr::io
