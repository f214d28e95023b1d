#pragma once

#include "methsnp/basis.hpp"
#include "methsnp/curves.hpp"
#include "methsnp/model.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace methsnp {

using Rng = std::mt19937_64;

// Seed of an independent stream: splitmix64(seed ^ index).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

// Main SNP effects used in the reference simulation design (D = 20).
inline constexpr std::array<double, 20> kReferenceAlpha = {
    1.20, 1.00, 0.80, 0.50, 0.30, 0.90, 1.60, 1.30, 0.67, 0.89,
    1.45, 1.40, 0.45, 0.70, 1.35, 0.95, 0.55, 0.88, 1.30, 0.50};

// The reference table, cycled when D > 20.
std::vector<double> default_alpha(int d);

struct MixtureComponent {
  double mean = 0.0;
  double variance = 1.0;
  double weight = 0.5;
};

// Two-component normal mixture for residual errors. Defaults are the mixture
// fitted to residuals of the obesity analysis.
struct MixtureNoise {
  MixtureComponent first{-1.256, 0.2559, 0.75};
  MixtureComponent second{3.815, 0.4684, 0.25};

  void validate() const;
  double mean() const;
  double variance() const;
  double draw(Rng& rng) const;
};

enum class NoiseKind { gaussian_snr10, mixture };
enum class DeltaKind { cos3pi, zero };

std::string_view to_string(NoiseKind kind);
NoiseKind parse_noise_kind(std::string_view name);
std::string_view to_string(DeltaKind kind);
DeltaKind parse_delta_kind(std::string_view name);
double delta_eval(DeltaKind kind, double t);

// Synthetic stand-ins for sequenced base samples: sorted random site
// positions over a region and levels from a smooth latent curve (a sum of
// random sinusoids) plus site noise, mapped through the logistic function.
struct ProfileConfig {
  int count = 8;
  int sites = 300;
  double region_start = 11190000.0;
  double region_length = 270000.0;
  int sinusoids = 5;
  double site_noise_sd = 0.25;  // logit scale

  void validate() const;
};

struct SimConfig {
  int n = 200;
  int d = 20;
  double maf_lo = 0.05;
  double maf_hi = 0.2;
  std::vector<double> alpha;  // empty = default_alpha(d)
  std::vector<double> eta;    // empty = all zero (H0)
  double zeta0 = 0.0;
  std::vector<double> zeta = {0.3};
  double covariate_sd = 0.1;
  DeltaKind delta = DeltaKind::cos3pi;
  WeightSpec weight_spec{WeightForm::exponential, 1.0};
  NoiseKind noise = NoiseKind::gaussian_snr10;
  double snr = 10.0;
  MixtureNoise mixture;
  std::uint64_t seed = 42;
  double sigma_t = 0.5;
  ProfileConfig profiles;
  SmoothingConfig smoothing;

  void validate() const;
  std::vector<double> alpha_or_default() const;
  std::vector<double> eta_or_zero() const;
};

struct Genotypes {
  Eigen::MatrixXd g;  // N x D
  std::vector<double> maf;
};

// Per SNP: f ~ Uniform(lo, hi), then G = Bernoulli(f) + Bernoulli(f).
Genotypes simulate_genotypes(int n, int d, double maf_lo, double maf_hi, Rng& rng);
Eigen::MatrixXd simulate_genotypes_with_maf(int n, std::span<const double> maf, Rng& rng);

std::vector<MethylationSample> synthesize_base_profiles(const ProfileConfig& config, Rng& rng);

inline constexpr double kLogitClamp = 1e-3;

// Shifts every level by `shift` on the logit scale (levels clamped to
// [1e-3, 1 - 1e-3] first). Positions are copied.
MethylationSample shift_methylation(const MethylationSample& base, double shift, std::string id);

// n_copies replicates, each with one shift ~ N(0, sigma_t^2) shared by all sites.
std::vector<MethylationSample> replicate_methylation(const MethylationSample& base, int n_copies, double sigma_t,
                                                     Rng& rng);

struct PhenotypeDraw {
  Eigen::VectorXd y;
  Eigen::VectorXd signal;
  Eigen::VectorXd noise;
  double sigma2 = 0.0;  // realized noise variance (mixture: the mixture variance)
};

// Y = zeta0 + W zeta + G alpha + int delta Pi + sum_d eta_d G_d Omega_d + eps.
// For gaussian_snr10, sigma^2 = Var(signal) / snr with the sample variance.
PhenotypeDraw simulate_phenotype(const CurveSet& curves, const Eigen::MatrixXd& g, const Eigen::MatrixXd& w,
                                 std::span<const double> snp_positions, const SimConfig& config, Rng& rng);

// Everything random about one replicate except the eta-dependent part of Y.
// Noise is stored standardized (gaussian) or as raw mixture draws, so the
// same replicate can be re-used across interaction magnitudes.
struct ReplicateDraw {
  Genotypes genotypes;
  Eigen::MatrixXd w;
  std::vector<double> snp_positions;
  CurveSet curves;
  Eigen::VectorXd base_signal;  // zeta0 + W zeta + G alpha + int delta Pi
  Eigen::VectorXd noise;        // standard normal or mixture draws
};

// Base profiles and smoothing operators for one study. Building this is the
// expensive part; draws reuse it.
class SimulationContext {
 public:
  explicit SimulationContext(const SimConfig& config);

  const SimConfig& config() const { return config_; }
  const std::vector<MethylationSample>& base_profiles() const { return bases_; }
  GenomicRange range() const { return range_; }
  const std::vector<double>& grid() const { return grid_; }

  // Replicate `replicate` with `n` individuals. Individual i uses base
  // profile i mod count; the first `count` individuals are unshifted.
  ReplicateDraw draw(int n, std::uint64_t replicate) const;

  // Raw methylation of a draw's individuals (positions and shifted levels).
  std::vector<MethylationSample> methylation(int n, std::uint64_t replicate) const;

 private:
  std::vector<MethylationSample> replicate_samples(int n, Rng& rng) const;

  SimConfig config_;
  std::vector<MethylationSample> bases_;
  std::vector<SmoothingOperator> smoothers_;
  GenomicRange range_;
  std::vector<double> grid_;
  Eigen::VectorXd delta_weights_;
};

// Y for a draw given the interaction vector and the generating weight spec.
// `omega` (N x D) may be passed to skip recomputing interaction covariates.
PhenotypeDraw phenotype_from_draw(const ReplicateDraw& draw, const SimConfig& config, std::span<const double> eta,
                                  const Eigen::MatrixXd& omega);

Dataset to_dataset(const ReplicateDraw& draw, const Eigen::VectorXd& y);

// Full dataset for replicate r of the configured design.
struct SimulatedData {
  Dataset dataset;
  std::vector<MethylationSample> methylation;  // raw, base-pair positions
  std::vector<double> snp_positions_bp;
  PhenotypeDraw phenotype;
  std::vector<double> maf;
};

SimulatedData simulate_dataset(const SimulationContext& context, std::uint64_t replicate);

// Coefficients of the pairwise generating model used by the comparison
// scenarios: Y = intercept + age + sex + SNP + CpG main effects over the
// interacting CpGs + gamma * SNP x CpG products + mixture noise.
struct ComparisonScenario {
  int index = 1;
  double intercept = 0.0;
  double age = 0.0;
  double sex = 0.0;
  double snp = 0.0;
  double cpg = 0.0;  // per interacting CpG
  int interacting_cpgs = 1;
};

inline constexpr std::array<ComparisonScenario, 5> kComparisonScenarios = {{
    {1, 5.0, 0.0798, 0.1521, -3.0, -5.35744, 1},
    {2, 5.16, 0.078, 0.225, -0.5, -0.2, 10},
    {3, 0.2341, 0.07203, 0.237, -0.2, -0.5, 20},
    {4, 0.2341, 0.07203, 0.237, -0.2, -0.5, 50},
    {5, 0.2341, 0.07203, 0.237, -0.2, -0.5, 100},
}};

const ComparisonScenario& comparison_scenario(int index);

// Array-style methylation at fixed CpGs shared by all individuals, one SNP at
// the region centre, age and sex covariates.
struct ArrayDesign {
  int n = 355;
  int cpg_count = 1080;
  double region_start = 0.0;
  double region_length = 1000000.0;
  int profiles = 8;
  int sinusoids = 5;
  double site_noise_sd = 0.5;  // logit scale, independent per individual and CpG
  double sigma_t = 0.5;
  double maf = 0.2;
  double age_lo = 14.0;
  double age_hi = 34.0;
  double male_fraction = 214.0 / 355.0;
  MixtureNoise mixture;
  std::uint64_t seed = 42;
  SmoothingConfig smoothing;

  void validate() const;
};

struct ArrayDraw {
  Eigen::MatrixXd levels;  // N x m
  Eigen::MatrixXd g;       // N x 1
  Eigen::MatrixXd w;       // N x 2: age, sex
  CurveSet curves;
  Eigen::VectorXd noise;
};

class ArrayContext {
 public:
  explicit ArrayContext(const ArrayDesign& design);

  const ArrayDesign& design() const { return design_; }
  const std::vector<double>& cpg_positions() const { return positions_; }
  double snp_position_bp() const { return snp_bp_; }
  double snp_position_unit() const { return scale_position(snp_bp_, range_); }
  // CpG indices ordered by distance to the SNP (ties by index).
  const std::vector<int>& nearest() const { return nearest_; }

  GenomicRange range() const { return range_; }
  const std::vector<double>& grid() const { return grid_; }
  // Normalized smoothing weights (M x m): curves = levels * smoother()'.
  const Eigen::MatrixXd& smoother() const { return smoother_; }

  // Without `smooth_curves` the curve set is left empty; linear functionals
  // of the curves can then be formed as levels * (smoother()' * weights).
  ArrayDraw draw(std::uint64_t replicate, bool smooth_curves = true) const;

 private:
  ArrayDesign design_;
  std::vector<double> positions_;
  Eigen::MatrixXd base_logits_;  // profiles x m
  double snp_bp_ = 0.0;
  std::vector<int> nearest_;
  GenomicRange range_;
  std::vector<double> grid_;
  Eigen::MatrixXd smoother_;  // M x m
};

// Phenotype of the comparison design for interaction coefficient gamma.
Eigen::VectorXd comparison_phenotype(const ArrayDraw& draw, const ComparisonScenario& scenario, double gamma,
                                     std::span<const int> nearest);

}  // namespace methsnp
