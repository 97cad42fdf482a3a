#include "blockcorr/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace blockcorr::io {

using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, delim)) fields.push_back(field);
  if (!line.empty() && line.back() == delim) fields.emplace_back();
  for (std::string& f : fields) {
    while (!f.empty() && (f.back() == ' ' || f.back() == '\r')) f.pop_back();
    std::size_t s = 0;
    while (s < f.size() && f[s] == ' ') ++s;
    f.erase(0, s);
    if (f.size() >= 2 && f.front() == '"' && f.back() == '"') f = f.substr(1, f.size() - 2);
  }
  return fields;
}

bool is_number(const std::string& s) {
  if (s.empty()) return false;
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool is_missing(const std::string& s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "NULL" || s == ".";
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

int Table::column(std::initializer_list<const char*> names) const {
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string h = lower(header[c]);
    for (const char* name : names) {
      if (h == name) return static_cast<int>(c);
    }
  }
  return -1;
}

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Parse, "cannot open " + path);
  Table table;
  std::string line;
  char delim = '\t';
  bool have_header = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!have_header) {
      delim = line.find('\t') != std::string::npos ? '\t' : ',';
      table.header = split(line, delim);
      have_header = true;
      continue;
    }
    std::vector<std::string> fields = split(line, delim);
    if (fields.size() != table.header.size()) {
      throw Error(ErrorCode::Parse, path + ":" + std::to_string(line_no) + ": expected " +
                                        std::to_string(table.header.size()) + " fields, found " +
                                        std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) throw Error(ErrorCode::Parse, path + ": empty file");
  return table;
}

double parse_number(const std::string& field, const std::string& context) {
  if (is_missing(field)) throw Error(ErrorCode::MissingValue, "missing value for " + context);
  if (!is_number(field)) throw Error(ErrorCode::Parse, "not a number: '" + field + "' (" + context + ")");
  double v = 0.0;
  const char* first = field.data();
  if (*first == '+') ++first;
  std::from_chars(first, field.data() + field.size(), v);
  if (!std::isfinite(v)) throw Error(ErrorCode::MissingValue, "non-finite value for " + context);
  return v;
}

ExpressionMatrix read_expression(const std::string& path, bool transpose) {
  const Table t = read_table(path);
  if (t.rows.empty()) throw Error(ErrorCode::Parse, path + ": no data rows");

  bool id_column = true;
  for (const auto& row : t.rows) {
    if (is_number(row[0]) || is_missing(row[0])) {
      id_column = false;
      break;
    }
  }
  const std::size_t offset = id_column ? 1 : 0;
  const std::size_t cols = t.header.size() - offset;
  if (cols == 0) throw Error(ErrorCode::Parse, path + ": no value columns");

  std::vector<std::string> col_ids(t.header.begin() + offset, t.header.end());
  std::vector<std::string> row_ids;
  Eigen::MatrixXd v(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    row_ids.push_back(id_column ? row[0] : "r" + std::to_string(r + 1));
    for (std::size_t c = 0; c < cols; ++c) {
      const std::string& gene = transpose ? row_ids.back() : col_ids[c];
      v(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          parse_number(row[c + offset], "gene " + gene + " in " + path);
    }
  }
  if (!transpose) {
    return ExpressionMatrix(std::move(v), std::move(col_ids), id_column ? row_ids : std::vector<std::string>{});
  }
  if (!id_column) throw Error(ErrorCode::Parse, path + ": transposed input needs gene identifiers in the first column");
  return ExpressionMatrix(v.transpose(), std::move(row_ids), std::move(col_ids));
}

std::string format_pvalue(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::string format_real(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Parse, "cannot write " + path);
  out << content;
}

void write_expression(const std::string& path, const ExpressionMatrix& matrix) {
  std::ostringstream out;
  out << "patient";
  for (const std::string& g : matrix.gene_ids()) out << '\t' << g;
  out << '\n';
  char buf[40];
  for (int i = 0; i < matrix.n(); ++i) {
    out << (matrix.patient_ids().empty() ? "r" + std::to_string(i + 1) : matrix.patient_ids()[i]);
    for (int j = 0; j < matrix.p(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", matrix.values()(i, j));
      out << '\t' << buf;
    }
    out << '\n';
  }
  write_file(path, out.str());
}

std::vector<GeneLocus> read_annotation(const std::string& path) {
  const Table t = read_table(path);
  const int id = t.column({"gene", "gene_id", "id"});
  const int chr = t.column({"chromosome", "chrom", "chr"});
  const int start = t.column({"start", "position", "pos"});
  const int end = t.column({"end"});
  if (id < 0 || chr < 0 || start < 0) {
    throw Error(ErrorCode::Parse, path + ": annotation needs gene, chromosome and start columns");
  }
  std::vector<GeneLocus> loci;
  for (const auto& row : t.rows) {
    GeneLocus g{row[id], row[chr], parse_number(row[start], "start of " + row[id]), 0.0};
    g.end = end >= 0 ? parse_number(row[end], "end of " + row[id]) : g.start;
    loci.push_back(std::move(g));
  }
  return loci;
}

void write_annotation(const std::string& path, const std::vector<GeneLocus>& loci) {
  std::ostringstream out;
  out << "gene\tchromosome\tstart\tend\n";
  for (const GeneLocus& g : loci) {
    out << g.id << '\t' << g.chromosome << '\t' << format_real(g.start) << '\t' << format_real(g.end) << '\n';
  }
  write_file(path, out.str());
}

std::vector<CovariateRecord> read_covariates(const std::string& path) {
  const Table t = read_table(path);
  const int patient = t.column({"patient", "sample"});
  const int chr = t.column({"chromosome", "chrom", "chr"});
  const int pos = t.column({"position", "pos", "start"});
  const int value = t.column({"value", "log_ratio", "signal"});
  if (patient < 0 || chr < 0 || pos < 0 || value < 0) {
    throw Error(ErrorCode::Parse, path + ": covariate file needs patient, chromosome, position and value columns");
  }
  std::vector<CovariateRecord> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    const std::string ctx = "covariate of " + row[patient] + " in " + path;
    out.push_back({row[patient], row[chr], parse_number(row[pos], ctx), parse_number(row[value], ctx)});
  }
  return out;
}

void write_segments(std::ostream& out, const std::vector<ChromosomeFit>& fits) {
  out << "chromosome\tsegment\tstart\tend\tstart_gene\tend_gene\tp_k\trho_hat\tloglik\ttestable\n";
  for (const ChromosomeFit& f : fits) {
    const Segmentation& s = f.fit.segmentation;
    for (int k = 0; k < s.segments(); ++k) {
      out << f.span.name << '\t' << k + 1 << '\t' << s.begin(k) + 1 << '\t' << s.end(k) << '\t'
          << f.standardized.gene_ids()[s.begin(k)] << '\t' << f.standardized.gene_ids()[s.end(k) - 1]
          << '\t' << s.width(k) << '\t' << format_real(s.rho[k]) << '\t'
          << format_real(s.segment_loglik[k]) << '\t' << (s.width(k) >= 2 ? "yes" : "no") << '\n';
    }
  }
}

std::vector<RegionRef> read_segments(const std::string& path) {
  const Table t = read_table(path);
  const int chr = t.column({"chromosome"});
  const int b = t.column({"start_gene"});
  const int e = t.column({"end_gene"});
  if (chr < 0 || b < 0 || e < 0) {
    throw Error(ErrorCode::InvalidArgument,
                path + ": segmentation needs chromosome, start_gene and end_gene columns");
  }
  std::vector<RegionRef> out;
  for (const auto& row : t.rows) out.push_back({row[chr], row[b], row[e]});
  return out;
}

void write_trace(std::ostream& out, const std::vector<ChromosomeFit>& fits) {
  out << "chromosome\tK\tloglik\tnormalized\tpenalty\tsecond_diff\tchosen\n";
  for (const ChromosomeFit& f : fits) {
    const SelectionTrace& t = f.fit.trace;
    for (std::size_t k = 0; k < t.loglik.size(); ++k) {
      out << f.span.name << '\t' << k + 1 << '\t' << format_real(t.loglik[k]) << '\t'
          << (k < t.normalized.size() ? format_real(t.normalized[k]) : "NA") << '\t'
          << (k < t.penalty.size() ? format_real(t.penalty[k]) : "NA") << '\t'
          << (k < t.second_diffs.size() ? format_real(t.second_diffs[k]) : "NA") << '\t'
          << (static_cast<int>(k) + 1 == t.chosen_k ? "yes" : "no") << '\n';
    }
  }
}

void write_regions(std::ostream& out, const std::vector<RegionReport>& reports) {
  out << "chromosome\tsegment\tstart\tend\tstart_gene\tend_gene\tp_k\trho_hat\trho0\tT_obs\tlambda0"
         "\tp_value\tp_adjusted\tsignificant\ttestable\n";
  for (const RegionReport& r : reports) {
    out << r.chromosome << '\t' << r.segment + 1 << '\t' << r.begin + 1 << '\t' << r.end << '\t'
        << r.start_gene << '\t' << r.end_gene << '\t' << r.width() << '\t' << format_real(r.rho_hat)
        << '\t' << format_real(r.rho0) << '\t';
    if (r.testable) {
      out << format_real(r.t_obs) << '\t' << format_real(r.lambda0) << '\t' << format_pvalue(r.p_value)
          << '\t' << format_pvalue(r.p_adjusted);
    } else {
      out << "NA\tNA\tNA\tNA";
    }
    out << '\t' << (r.significant ? "yes" : "no") << '\t' << (r.testable ? "yes" : "no") << '\n';
  }
}

namespace {

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string segments_json(const std::vector<ChromosomeFit>& fits) {
  json doc = json::array();
  for (const ChromosomeFit& f : fits) {
    const Segmentation& s = f.fit.segmentation;
    json chr;
    chr["chromosome"] = f.span.name;
    chr["genes"] = f.span.count;
    chr["chosen_k"] = f.fit.trace.chosen_k;
    chr["degenerate_selection"] = f.fit.trace.degenerate;
    chr["total_loglik"] = s.total_loglik;
    chr["segments"] = json::array();
    for (int k = 0; k < s.segments(); ++k) {
      chr["segments"].push_back({{"segment", k + 1},
                                 {"start", s.begin(k) + 1},
                                 {"end", s.end(k)},
                                 {"start_gene", f.standardized.gene_ids()[s.begin(k)]},
                                 {"end_gene", f.standardized.gene_ids()[s.end(k) - 1]},
                                 {"p_k", s.width(k)},
                                 {"rho_hat", s.rho[k]},
                                 {"loglik", s.segment_loglik[k]},
                                 {"testable", s.width(k) >= 2}});
    }
    doc.push_back(std::move(chr));
  }
  return doc.dump(2) + "\n";
}

std::string regions_json(const std::vector<RegionReport>& reports) {
  json doc = json::array();
  for (const RegionReport& r : reports) {
    doc.push_back({{"chromosome", r.chromosome},
                   {"segment", r.segment + 1},
                   {"start", r.begin + 1},
                   {"end", r.end},
                   {"start_gene", r.start_gene},
                   {"end_gene", r.end_gene},
                   {"p_k", r.width()},
                   {"rho_hat", r.rho_hat},
                   {"rho0", nullable(r.rho0)},
                   {"T_obs", r.testable ? nullable(r.t_obs) : json(nullptr)},
                   {"lambda0", r.testable ? nullable(r.lambda0) : json(nullptr)},
                   {"p_value", r.testable ? nullable(r.p_value) : json(nullptr)},
                   {"p_adjusted", r.testable ? nullable(r.p_adjusted) : json(nullptr)},
                   {"significant", r.significant},
                   {"testable", r.testable}});
  }
  return doc.dump(2) + "\n";
}

void write_truth(std::ostream& out, const ScenarioSpec& spec, const SimulatedData& data) {
  out << "chromosome\tregion\tstart_gene\tend_gene\tlabel\n";
  for (std::size_t c = 0; c < spec.chromosomes.size(); ++c) {
    const ChromosomeSpec& chr = spec.chromosomes[c];
    const int first = data.chromosomes[c].first;
    int k = 0;
    for (const RegionSpec& r : chr.regions) {
      out << chr.name << '\t' << ++k << '\t' << data.annotation[first + r.begin].id << '\t'
          << data.annotation[first + r.end - 1].id << '\t' << (r.h1 ? "H1" : "H0") << '\n';
    }
  }
}

std::vector<TruthRegion> read_truth(const std::string& path) {
  const Table t = read_table(path);
  const int chr = t.column({"chromosome"});
  const int b = t.column({"start_gene"});
  const int e = t.column({"end_gene"});
  const int label = t.column({"label"});
  if (chr < 0 || b < 0 || e < 0 || label < 0) {
    throw Error(ErrorCode::InvalidArgument, path + ": truth needs chromosome, start_gene, end_gene, label");
  }
  std::vector<TruthRegion> out;
  for (const auto& row : t.rows) out.push_back({row[chr], row[b], row[e], row[label] == "H1"});
  return out;
}

std::vector<CallRegion> read_calls(const std::string& path) {
  const Table t = read_table(path);
  const int chr = t.column({"chromosome"});
  const int b = t.column({"start_gene"});
  const int e = t.column({"end_gene"});
  const int p = t.column({"p_value", "score"});
  if (chr < 0 || b < 0 || e < 0 || p < 0) {
    throw Error(ErrorCode::InvalidArgument, path + ": calls need chromosome, start_gene, end_gene, p_value");
  }
  std::vector<CallRegion> out;
  for (const auto& row : t.rows) {
    const double score = is_missing(row[p]) ? 1.0 : parse_number(row[p], "p_value in " + path);
    out.push_back({row[chr], row[b], row[e], score});
  }
  return out;
}

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

ScenarioSpec read_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Parse, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, path + ": " + e.what());
  }
  try {
    const int n = get_or(j, "n", 58);
    const double rho1 = get_or(j, "rho1", 0.7);
    const auto seed = get_or<std::uint64_t>(j, "seed", 1);
    ScenarioSpec spec;
    if (j.contains("chromosomes")) {
      spec.n = n;
      spec.rho1 = rho1;
      spec.seed = seed;
      std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
      for (const json& c : j.at("chromosomes")) {
        ChromosomeSpec chr;
        chr.name = c.at("name").get<std::string>();
        chr.genes = c.at("genes").get<int>();
        chr.rho0 = c.at("rho0").get<double>();
        if (c.contains("regions")) {
          for (const json& r : c.at("regions")) {
            chr.regions.push_back({r.at("begin").get<int>(), r.at("end").get<int>(), r.at("h1").get<bool>()});
          }
        } else {
          chr.regions = alternating_regions(chr.genes, rng);
        }
        spec.chromosomes.push_back(std::move(chr));
      }
    } else {
      const int count = get_or(j, "chromosome_count", kDeskChromosomes);
      const int genes = get_or(j, "genes", kDeskGenes);
      const json rho0 = j.contains("rho0") ? j.at("rho0") : json(0.18);
      if (rho0.is_string() && rho0.get<std::string>() == "varying") {
        spec = scenario_varying_background(n, rho1, seed, count, genes);
      } else {
        spec = scenario_uniform_background(n, rho0.get<double>(), rho1, seed, count, genes);
      }
    }
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, path + ": " + e.what());
  }
}

std::string scenario_json(const ScenarioSpec& spec) {
  json j;
  j["n"] = spec.n;
  j["rho1"] = spec.rho1;
  j["seed"] = spec.seed;
  j["chromosomes"] = json::array();
  for (const ChromosomeSpec& c : spec.chromosomes) {
    json chr{{"name", c.name}, {"genes", c.genes}, {"rho0", c.rho0}, {"regions", json::array()}};
    for (const RegionSpec& r : c.regions) chr["regions"].push_back({{"begin", r.begin}, {"end", r.end}, {"h1", r.h1}});
    j["chromosomes"].push_back(std::move(chr));
  }
  return j.dump(2) + "\n";
}

}  // namespace blockcorr::io
