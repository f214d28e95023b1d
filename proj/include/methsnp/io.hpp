#pragma once

#include "methsnp/curves.hpp"
#include "methsnp/model.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace methsnp {

// Header plus rows of a plain comma-separated file (no quoting). Blank lines
// are skipped; `lines` holds the 1-based source line of each row.
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> lines;
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(std::istream& in, const std::string& source);

// Long format `individual_id,position,level`; rows of one individual may
// appear in any order. Samples are returned sorted by id, sites by position.
std::vector<MethylationSample> read_methylation_csv(const std::filesystem::path& path);

struct GenotypeTable {
  std::vector<std::string> ids;
  std::vector<std::string> snp_ids;
  Eigen::MatrixXd g;
};

// `individual_id,<snp ids...>` with entries 0, 1 or 2.
GenotypeTable read_genotypes_csv(const std::filesystem::path& path);

struct SnpTable {
  std::vector<std::string> ids;
  std::vector<double> positions_bp;
};

// `snp_id,position_bp`.
SnpTable read_snp_positions_csv(const std::filesystem::path& path);

struct PhenotypeTable {
  std::vector<std::string> ids;
  std::vector<std::string> covariate_names;
  Eigen::VectorXd y;
  Eigen::MatrixXd w;
};

// `individual_id,y,<covariates...>`.
PhenotypeTable read_phenotype_csv(const std::filesystem::path& path);

struct LoadedData {
  Dataset dataset;
  std::vector<MethylationSample> methylation;  // sorted by id
  std::vector<double> snp_positions_bp;
  std::vector<std::string> covariate_names;
};

// Joins the four files on individual id (sorted), scales SNP positions to the
// methylation region and smooths the curves. Throws DataError listing the
// symmetric difference when id sets differ.
LoadedData load_dataset(const std::filesystem::path& methylation_path, const std::filesystem::path& genotype_path,
                        const std::filesystem::path& phenotype_path, const std::filesystem::path& snp_positions_path,
                        const SmoothingConfig& smoothing);

void write_methylation_csv(std::ostream& out, const std::vector<MethylationSample>& samples);
void write_genotypes_csv(std::ostream& out, const std::vector<std::string>& ids,
                         const std::vector<std::string>& snp_ids, const Eigen::MatrixXd& g);
void write_snp_positions_csv(std::ostream& out, const std::vector<std::string>& snp_ids,
                             const std::vector<double>& positions_bp);
void write_phenotype_csv(std::ostream& out, const std::vector<std::string>& ids, const Eigen::VectorXd& y,
                         const Eigen::MatrixXd& w, const std::vector<std::string>& covariate_names);
// Long format `individual_id,t,value` on the unit grid.
void write_curves_csv(std::ostream& out, const CurveSet& curves);

}  // namespace methsnp
