#include "methsnp/io.hpp"

#include "methsnp/error.hpp"
#include "text_format.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace methsnp {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                        : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string where(const CsvTable& table, std::size_t row) {
  return table.source + ":" + std::to_string(table.lines[row]);
}

double parse_number(const CsvTable& table, std::size_t row, std::size_t col) {
  const std::string& text = table.rows[row][col];
  double value = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw DataError(where(table, row) + ": column '" + table.header[col] + "' is not a finite number: '" + text +
                    "'");
  }
  return value;
}

void expect_header(const CsvTable& table, const std::vector<std::string>& prefix, std::size_t min_columns) {
  if (table.header.size() < min_columns) {
    throw DataError(table.source + ": expected at least " + std::to_string(min_columns) + " columns in header");
  }
  for (std::size_t c = 0; c < prefix.size(); ++c) {
    if (table.header[c] != prefix[c]) {
      throw DataError(table.source + ": header column " + std::to_string(c + 1) + " must be '" + prefix[c] +
                      "', found '" + table.header[c] + "'");
    }
  }
}

void expect_rows(const CsvTable& table) {
  if (table.rows.empty()) throw DataError(table.source + ": no data rows");
}

// Rejects repeated row ids and returns them in file order.
std::vector<std::string> unique_ids(const CsvTable& table) {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string& id = table.rows[r][0];
    if (id.empty()) throw DataError(where(table, r) + ": empty identifier");
    if (!seen.insert(id).second) throw DataError(where(table, r) + ": duplicate identifier '" + id + "'");
    ids.push_back(id);
  }
  return ids;
}

// Row permutation that sorts ids.
std::vector<int> sorted_order(const std::vector<std::string>& ids) {
  std::vector<int> order(ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return ids[a] < ids[b]; });
  return order;
}

std::string describe_difference(const std::set<std::string>& a, const std::string& a_name,
                                const std::set<std::string>& b, const std::string& b_name) {
  std::vector<std::string> only_a;
  std::vector<std::string> only_b;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(only_a));
  std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(only_b));
  auto list = [](const std::vector<std::string>& v) {
    std::string s;
    const std::size_t shown = std::min<std::size_t>(v.size(), 10);
    for (std::size_t i = 0; i < shown; ++i) s += (i ? ", " : "") + v[i];
    if (v.size() > shown) s += ", ... (" + std::to_string(v.size()) + " total)";
    return s.empty() ? std::string("none") : s;
  };
  return "individual ids differ between " + a_name + " and " + b_name + "; only in " + a_name + ": " +
         list(only_a) + "; only in " + b_name + ": " + list(only_b);
}

}  // namespace

CsvTable parse_csv(std::istream& in, const std::string& source) {
  CsvTable table;
  table.source = source;
  std::string line;
  int number = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    if (line.find('"') != std::string::npos) {
      throw DataError(source + ":" + std::to_string(number) + ": quoted fields are not supported");
    }
    auto fields = split_fields(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw DataError(source + ":" + std::to_string(number) + ": expected " + std::to_string(table.header.size()) +
                      " fields, found " + std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.lines.push_back(number);
  }
  if (!have_header) throw DataError(source + ": empty file, header required");
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return parse_csv(in, path.string());
}

std::vector<MethylationSample> read_methylation_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  expect_header(table, {"individual_id", "position", "level"}, 3);
  if (table.header.size() != 3) throw DataError(table.source + ": expected exactly 3 columns");
  expect_rows(table);

  std::map<std::string, std::vector<std::pair<Site, std::size_t>>> by_id;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string& id = table.rows[r][0];
    if (id.empty()) throw DataError(where(table, r) + ": empty individual id");
    const double position = parse_number(table, r, 1);
    const double level = parse_number(table, r, 2);
    if (position < 0.0 || position != std::floor(position)) {
      throw DataError(where(table, r) + ": position must be a non-negative integer base pair");
    }
    if (level < 0.0 || level > 1.0) {
      throw DataError(where(table, r) + ": methylation level " + table.rows[r][2] + " outside [0,1]");
    }
    by_id[id].push_back({Site{position, level}, r});
  }

  std::vector<MethylationSample> out;
  out.reserve(by_id.size());
  for (auto& [id, entries] : by_id) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.first.position < b.first.position; });
    MethylationSample sample;
    sample.individual_id = id;
    for (std::size_t j = 0; j < entries.size(); ++j) {
      if (j > 0 && entries[j].first.position == entries[j - 1].first.position) {
        throw DataError(where(table, entries[j].second) + ": duplicate position " + table.rows[entries[j].second][1] +
                        " for individual '" + id + "'");
      }
      sample.sites.push_back(entries[j].first);
    }
    out.push_back(std::move(sample));
  }
  return out;
}

GenotypeTable read_genotypes_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  expect_header(table, {"individual_id"}, 2);
  expect_rows(table);
  const auto ids = unique_ids(table);
  const auto order = sorted_order(ids);

  GenotypeTable out;
  out.snp_ids.assign(table.header.begin() + 1, table.header.end());
  std::set<std::string> seen;
  for (const auto& s : out.snp_ids) {
    if (s.empty()) throw DataError(table.source + ": empty SNP id in header");
    if (!seen.insert(s).second) throw DataError(table.source + ": duplicate SNP id '" + s + "' in header");
  }
  const int n = static_cast<int>(ids.size());
  const int d = static_cast<int>(out.snp_ids.size());
  out.g.resize(n, d);
  for (int i = 0; i < n; ++i) {
    const std::size_t r = static_cast<std::size_t>(order[i]);
    out.ids.push_back(ids[r]);
    for (int k = 0; k < d; ++k) {
      const std::string& text = table.rows[r][k + 1];
      if (text != "0" && text != "1" && text != "2") {
        throw DataError(where(table, r) + ": genotype for '" + out.snp_ids[k] + "' must be 0, 1 or 2, found '" +
                        text + "'");
      }
      out.g(i, k) = text[0] - '0';
    }
  }
  return out;
}

SnpTable read_snp_positions_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  expect_header(table, {"snp_id", "position_bp"}, 2);
  if (table.header.size() != 2) throw DataError(table.source + ": expected exactly 2 columns");
  expect_rows(table);
  SnpTable out;
  out.ids = unique_ids(table);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const double position = parse_number(table, r, 1);
    if (position < 0.0) throw DataError(where(table, r) + ": negative SNP position");
    out.positions_bp.push_back(position);
  }
  return out;
}

PhenotypeTable read_phenotype_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  expect_header(table, {"individual_id", "y"}, 2);
  expect_rows(table);
  const auto ids = unique_ids(table);
  const auto order = sorted_order(ids);

  PhenotypeTable out;
  out.covariate_names.assign(table.header.begin() + 2, table.header.end());
  const int n = static_cast<int>(ids.size());
  const int s = static_cast<int>(out.covariate_names.size());
  out.y.resize(n);
  out.w.resize(n, s);
  for (int i = 0; i < n; ++i) {
    const std::size_t r = static_cast<std::size_t>(order[i]);
    out.ids.push_back(ids[r]);
    out.y(i) = parse_number(table, r, 1);
    for (int c = 0; c < s; ++c) out.w(i, c) = parse_number(table, r, static_cast<std::size_t>(c) + 2);
  }
  return out;
}

LoadedData load_dataset(const std::filesystem::path& methylation_path, const std::filesystem::path& genotype_path,
                        const std::filesystem::path& phenotype_path, const std::filesystem::path& snp_positions_path,
                        const SmoothingConfig& smoothing) {
  smoothing.validate();
  auto methylation = read_methylation_csv(methylation_path);
  auto genotypes = read_genotypes_csv(genotype_path);
  auto phenotype = read_phenotype_csv(phenotype_path);
  const auto snps = read_snp_positions_csv(snp_positions_path);

  std::set<std::string> meth_ids;
  for (const auto& s : methylation) meth_ids.insert(s.individual_id);
  const std::set<std::string> geno_ids(genotypes.ids.begin(), genotypes.ids.end());
  const std::set<std::string> pheno_ids(phenotype.ids.begin(), phenotype.ids.end());
  if (meth_ids != geno_ids) throw DataError(describe_difference(meth_ids, "methylation", geno_ids, "genotypes"));
  if (meth_ids != pheno_ids) throw DataError(describe_difference(meth_ids, "methylation", pheno_ids, "phenotype"));

  std::map<std::string, double> snp_bp;
  for (std::size_t k = 0; k < snps.ids.size(); ++k) snp_bp[snps.ids[k]] = snps.positions_bp[k];

  LoadedData out;
  const GenomicRange range = genomic_range(methylation);
  for (const auto& id : genotypes.snp_ids) {
    const auto it = snp_bp.find(id);
    if (it == snp_bp.end()) throw DataError("SNP '" + id + "' has no entry in the SNP position file");
    if (it->second < range.t_min || it->second > range.t_max) {
      throw DataError("SNP '" + id + "' at " + format_double(it->second) + " bp lies outside the methylation region [" +
                      format_double(range.t_min) + ", " + format_double(range.t_max) + "]");
    }
    out.snp_positions_bp.push_back(it->second);
    out.dataset.snp_positions.push_back(scale_position(it->second, range));
  }

  // All three tables are sorted by id, so rows already line up.
  out.dataset.snp_ids = genotypes.snp_ids;
  out.dataset.g = std::move(genotypes.g);
  out.dataset.y = std::move(phenotype.y);
  out.dataset.w = std::move(phenotype.w);
  out.covariate_names = std::move(phenotype.covariate_names);
  out.dataset.curves = build_curve_set(methylation, smoothing);
  out.methylation = std::move(methylation);
  out.dataset.validate();
  return out;
}

void write_methylation_csv(std::ostream& out, const std::vector<MethylationSample>& samples) {
  out << "individual_id,position,level\n";
  for (const auto& s : samples) {
    for (const auto& site : s.sites) {
      out << s.individual_id << ',' << format_double(site.position) << ',' << format_double(site.level) << '\n';
    }
  }
}

void write_genotypes_csv(std::ostream& out, const std::vector<std::string>& ids,
                         const std::vector<std::string>& snp_ids, const Eigen::MatrixXd& g) {
  out << "individual_id";
  for (const auto& s : snp_ids) out << ',' << s;
  out << '\n';
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    out << ids[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < g.cols(); ++k) out << ',' << static_cast<int>(std::lround(g(i, k)));
    out << '\n';
  }
}

void write_snp_positions_csv(std::ostream& out, const std::vector<std::string>& snp_ids,
                             const std::vector<double>& positions_bp) {
  out << "snp_id,position_bp\n";
  for (std::size_t k = 0; k < snp_ids.size(); ++k) out << snp_ids[k] << ',' << format_double(positions_bp[k]) << '\n';
}

void write_phenotype_csv(std::ostream& out, const std::vector<std::string>& ids, const Eigen::VectorXd& y,
                         const Eigen::MatrixXd& w, const std::vector<std::string>& covariate_names) {
  out << "individual_id,y";
  for (const auto& c : covariate_names) out << ',' << c;
  out << '\n';
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    out << ids[static_cast<std::size_t>(i)] << ',' << format_double(y(i));
    for (Eigen::Index c = 0; c < w.cols(); ++c) out << ',' << format_double(w(i, c));
    out << '\n';
  }
}

void write_curves_csv(std::ostream& out, const CurveSet& curves) {
  out << "individual_id,t,value\n";
  for (int i = 0; i < curves.size(); ++i) {
    for (std::size_t m = 0; m < curves.grid.size(); ++m) {
      out << curves.ids[static_cast<std::size_t>(i)] << ',' << format_double(curves.grid[m]) << ','
          << format_double(curves.values(i, static_cast<Eigen::Index>(m))) << '\n';
    }
  }
}

}  // namespace methsnp
