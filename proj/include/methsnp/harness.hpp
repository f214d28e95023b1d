#pragma once

#include "methsnp/basis.hpp"
#include "methsnp/model.hpp"
#include "methsnp/simgen.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace methsnp {

enum class StudyKind { type1, power, misspec, mixture_h0, baseline_compare };

std::string_view to_string(StudyKind kind);
StudyKind parse_study_kind(std::string_view name);

struct StudySpec {
  StudyKind kind = StudyKind::type1;
  int replicates = 1000;
  SimConfig sim;
  std::vector<WeightSpec> fit_weight_specs;
  // Generating weight functions (power, misspec). Empty means sim.weight_spec.
  std::vector<WeightSpec> generation_specs;
  // Interaction magnitudes applied to every SNP; for baseline_compare the
  // SNP x CpG coefficient. H0 studies use {0}.
  std::vector<double> eta_grid;
  // Empty means {sim.n}.
  std::vector<int> sample_sizes;
  double alpha_level = 0.05;
  int workers = 0;  // 0: METHSNP_WORKERS or 1; never affects results
  int basis_size = 10;
  LambdaSearch search;
  double max_exclusion_fraction = 0.01;

  // baseline_compare only
  int scenario = 3;
  ArrayDesign array;
  double window_bp = 500000.0;

  void validate() const;
  std::vector<WeightSpec> generations() const;
  std::vector<int> sizes() const;
};

// Interaction coefficients for a comparison scenario: a fixed base grid
// scaled by 20 / (interacting CpGs), since the signal grows with their count.
std::vector<double> comparison_grid(int scenario);

// Desk-scale defaults for each study kind.
StudySpec default_study(StudyKind kind);

struct PValueRecord {
  int replicate = 0;
  int n = 0;
  std::string generation;  // generating weight spec label (or "scenario:k")
  double eta = 0.0;
  std::string fit_spec;
  std::string method;  // "proposed" or "baseline"
  double p = 1.0;
};

struct PowerCell {
  std::string method;
  std::string generation;
  WeightSpec fit;
  int n = 0;
  double eta = 0.0;
  int replicates = 0;
  int rejections = 0;
  double power = 0.0;
  double se = 0.0;  // sqrt(power (1 - power) / replicates)
  double ks = 0.0;  // KS distance of the cell's p-values from Uniform(0,1)
};

struct Exclusion {
  int replicate = 0;
  std::string reason;
};

struct StudyResult {
  StudySpec spec;
  std::vector<PValueRecord> pvalues;  // excluded replicates removed
  std::vector<PowerCell> cells;
  std::vector<Exclusion> exclusions;
  int replicates_used = 0;
  bool failed = false;
  std::string failure;
  double wall_seconds = 0.0;

  const PowerCell& cell(std::string_view method, std::string_view generation, const WeightSpec& fit, int n,
                        double eta) const;
};

// Kolmogorov-Smirnov distance sup |F_n(x) - x| for values in [0,1].
double ks_uniform(std::vector<double> values);

StudyResult run_type1_study(const StudySpec& spec);
StudyResult run_power_study(const StudySpec& spec);
StudyResult run_misspec_study(const StudySpec& spec);
StudyResult run_mixture_h0_study(const StudySpec& spec);
StudyResult run_baseline_comparison(const StudySpec& spec);
StudyResult run_study(const StudySpec& spec);

// Worker count from METHSNP_WORKERS, else 1.
int default_worker_count();

// study_result.json, pvalues.csv, power.csv, qq.csv (deterministic) and
// timing.json (wall time, worker count).
void write_study_outputs(const StudyResult& result, const std::filesystem::path& directory);

}  // namespace methsnp
