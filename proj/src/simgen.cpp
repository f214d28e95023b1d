#include "methsnp/simgen.hpp"

#include "methsnp/error.hpp"

#include <cstdio>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace methsnp {

namespace {

constexpr std::uint64_t kProfileStream = 0x9e3779b97f4a7c15ULL;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit_clamped(double p) {
  const double q = std::clamp(p, kLogitClamp, 1.0 - kLogitClamp);
  return std::log(q / (1.0 - q));
}

// Zero-padded so lexicographic order matches simulation order.
std::string individual_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ind_%06d", i + 1);
  return buf;
}

double sample_variance(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  return (v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1);
}

Eigen::VectorXd draw_noise(const SimConfig& config, int n, Rng& rng) {
  Eigen::VectorXd out(n);
  if (config.noise == NoiseKind::mixture) {
    for (int i = 0; i < n; ++i) out[i] = config.mixture.draw(rng);
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < n; ++i) out[i] = normal(rng);
  }
  return out;
}

PhenotypeDraw finish_phenotype(Eigen::VectorXd signal, const Eigen::VectorXd& noise, const SimConfig& config) {
  PhenotypeDraw out;
  if (config.noise == NoiseKind::mixture) {
    out.sigma2 = config.mixture.variance();
    out.noise = noise;
  } else {
    const double var = sample_variance(signal);
    if (!(var > 0.0)) throw DataError("phenotype signal has zero variance");
    out.sigma2 = var / config.snr;
    out.noise = std::sqrt(out.sigma2) * noise;
  }
  out.y = signal + out.noise;
  out.signal = std::move(signal);
  return out;
}

Eigen::VectorXd interaction_signal(const Eigen::MatrixXd& g, const Eigen::MatrixXd& omega,
                                   std::span<const double> eta) {
  if (static_cast<Eigen::Index>(eta.size()) != g.cols() || omega.cols() != g.cols() || omega.rows() != g.rows()) {
    throw DataError("interaction effects do not match the number of SNPs");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(g.rows());
  for (Eigen::Index d = 0; d < g.cols(); ++d) {
    if (eta[static_cast<std::size_t>(d)] != 0.0) {
      out += eta[static_cast<std::size_t>(d)] * g.col(d).cwiseProduct(omega.col(d));
    }
  }
  return out;
}

Eigen::VectorXd main_signal(const SimConfig& config, const Eigen::MatrixXd& w, const Eigen::MatrixXd& g,
                            const Eigen::VectorXd& delta_term) {
  const auto alpha = config.alpha_or_default();
  Eigen::VectorXd out = Eigen::VectorXd::Constant(g.rows(), config.zeta0) + delta_term;
  for (Eigen::Index s = 0; s < w.cols(); ++s) out += config.zeta[static_cast<std::size_t>(s)] * w.col(s);
  for (Eigen::Index d = 0; d < g.cols(); ++d) out += alpha[static_cast<std::size_t>(d)] * g.col(d);
  return out;
}

Eigen::VectorXd delta_weights(DeltaKind kind, std::span<const double> grid) {
  if (kind == DeltaKind::zero) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  return quadrature_weights(grid, [kind](double t) { return delta_eval(kind, t); });
}

// Smooth latent logit curve on [0,1]: an offset plus random sinusoids.
struct LatentProfile {
  struct Wave {
    double amplitude, frequency, phase;
  };
  double offset = 0.0;
  std::vector<Wave> waves;

  double operator()(double x) const {
    double v = offset;
    for (const auto& w : waves) v += w.amplitude * std::sin(2.0 * std::numbers::pi * w.frequency * x + w.phase);
    return v;
  }
};

LatentProfile draw_latent(int sinusoids, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  LatentProfile out;
  for (int k = 0; k < sinusoids; ++k) {
    out.waves.push_back({0.4 + 0.8 * unit(rng), 0.5 + 5.5 * unit(rng), 2.0 * std::numbers::pi * unit(rng)});
  }
  out.offset = 0.5 * normal(rng);
  return out;
}

Eigen::MatrixXd draw_covariates(const SimConfig& config, int n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, config.covariate_sd);
  Eigen::MatrixXd w(n, static_cast<Eigen::Index>(config.zeta.size()));
  for (Eigen::Index s = 0; s < w.cols(); ++s) {
    for (int i = 0; i < n; ++i) w(i, s) = normal(rng);
  }
  return w;
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = (seed ^ index) + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<double> default_alpha(int d) {
  if (d < 1) throw UsageError("number of SNPs must be positive");
  std::vector<double> out(static_cast<std::size_t>(d));
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = kReferenceAlpha[j % kReferenceAlpha.size()];
  return out;
}

void MixtureNoise::validate() const {
  for (const auto* c : {&first, &second}) {
    if (!(c->variance > 0.0) || !std::isfinite(c->mean)) throw UsageError("mixture variances must be positive");
    if (!(c->weight >= 0.0 && c->weight <= 1.0)) throw UsageError("mixture weights must lie in [0,1]");
  }
  if (std::abs(first.weight + second.weight - 1.0) > 1e-9) throw UsageError("mixture weights must sum to 1");
}

double MixtureNoise::mean() const { return first.weight * first.mean + second.weight * second.mean; }

double MixtureNoise::variance() const {
  const double mu = mean();
  const double second_moment = first.weight * (first.variance + first.mean * first.mean) +
                               second.weight * (second.variance + second.mean * second.mean);
  return second_moment - mu * mu;
}

double MixtureNoise::draw(Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& c = unit(rng) < first.weight ? first : second;
  std::normal_distribution<double> normal(c.mean, std::sqrt(c.variance));
  return normal(rng);
}

std::string_view to_string(NoiseKind kind) {
  return kind == NoiseKind::mixture ? "mixture" : "gaussian_snr10";
}

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "mixture") return NoiseKind::mixture;
  if (name == "gaussian_snr10" || name == "gaussian") return NoiseKind::gaussian_snr10;
  throw UsageError("unknown noise model '" + std::string(name) + "'");
}

std::string_view to_string(DeltaKind kind) { return kind == DeltaKind::zero ? "zero" : "cos3pi"; }

DeltaKind parse_delta_kind(std::string_view name) {
  if (name == "cos3pi") return DeltaKind::cos3pi;
  if (name == "zero") return DeltaKind::zero;
  throw UsageError("unknown functional coefficient '" + std::string(name) + "'");
}

double delta_eval(DeltaKind kind, double t) {
  return kind == DeltaKind::zero ? 0.0 : std::cos(3.0 * std::numbers::pi * t);
}

void ProfileConfig::validate() const {
  if (count < 1) throw UsageError("profile count must be positive");
  if (sites < 50) throw UsageError("profiles need at least 50 sites");
  if (!(region_length >= sites)) throw UsageError("region too short for the requested number of sites");
  if (sinusoids < 0) throw UsageError("sinusoid count must be non-negative");
  if (!(site_noise_sd >= 0.0)) throw UsageError("site noise must be non-negative");
}

void SimConfig::validate() const {
  if (n < 8) throw UsageError("sample size must be at least 8");
  if (d < 1) throw UsageError("number of SNPs must be positive");
  if (!(maf_lo > 0.0 && maf_lo <= maf_hi && maf_hi < 0.5)) throw UsageError("MAF range must satisfy 0 < lo <= hi < 0.5");
  if (!alpha.empty() && static_cast<int>(alpha.size()) != d) throw UsageError("alpha must have D entries");
  if (!eta.empty() && static_cast<int>(eta.size()) != d) throw UsageError("eta must have D entries");
  if (!(covariate_sd > 0.0)) throw UsageError("covariate sd must be positive");
  if (!(snr > 0.0)) throw UsageError("signal-to-noise ratio must be positive");
  if (!(sigma_t >= 0.0)) throw UsageError("replicate shift sd must be non-negative");
  weight_spec.validate();
  mixture.validate();
  profiles.validate();
  smoothing.validate();
}

std::vector<double> SimConfig::alpha_or_default() const { return alpha.empty() ? default_alpha(d) : alpha; }

std::vector<double> SimConfig::eta_or_zero() const {
  return eta.empty() ? std::vector<double>(static_cast<std::size_t>(d), 0.0) : eta;
}

Eigen::MatrixXd simulate_genotypes_with_maf(int n, std::span<const double> maf, Rng& rng) {
  Eigen::MatrixXd g(n, static_cast<Eigen::Index>(maf.size()));
  for (std::size_t d = 0; d < maf.size(); ++d) {
    std::bernoulli_distribution allele(maf[d]);
    for (int i = 0; i < n; ++i) {
      g(i, static_cast<Eigen::Index>(d)) = static_cast<double>(allele(rng)) + static_cast<double>(allele(rng));
    }
  }
  return g;
}

Genotypes simulate_genotypes(int n, int d, double maf_lo, double maf_hi, Rng& rng) {
  Genotypes out;
  std::uniform_real_distribution<double> maf(maf_lo, maf_hi);
  out.maf.resize(static_cast<std::size_t>(d));
  for (auto& f : out.maf) f = maf(rng);
  out.g = simulate_genotypes_with_maf(n, out.maf, rng);
  return out;
}

std::vector<MethylationSample> synthesize_base_profiles(const ProfileConfig& config, Rng& rng) {
  config.validate();
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto last = static_cast<long long>(config.region_length);
  std::uniform_int_distribution<long long> offset(0, last);

  std::vector<MethylationSample> out;
  for (int b = 0; b < config.count; ++b) {
    std::set<long long> picked;
    while (static_cast<int>(picked.size()) < config.sites) picked.insert(offset(rng));

    const auto latent = draw_latent(config.sinusoids, rng);

    MethylationSample sample;
    sample.individual_id = "base_" + std::to_string(b + 1);
    for (long long p : picked) {
      const double x = static_cast<double>(p) / config.region_length;
      const double value = latent(x) + config.site_noise_sd * normal(rng);
      sample.sites.push_back({config.region_start + static_cast<double>(p), logistic(value)});
    }
    out.push_back(std::move(sample));
  }
  return out;
}

MethylationSample shift_methylation(const MethylationSample& base, double shift, std::string id) {
  MethylationSample out;
  out.individual_id = std::move(id);
  out.sites.reserve(base.sites.size());
  for (const auto& s : base.sites) out.sites.push_back({s.position, logistic(logit_clamped(s.level) + shift)});
  return out;
}

std::vector<MethylationSample> replicate_methylation(const MethylationSample& base, int n_copies, double sigma_t,
                                                     Rng& rng) {
  if (n_copies < 0) throw UsageError("replicate count must be non-negative");
  std::normal_distribution<double> shift(0.0, sigma_t);
  std::vector<MethylationSample> out;
  out.reserve(static_cast<std::size_t>(n_copies));
  for (int c = 0; c < n_copies; ++c) {
    const double theta = sigma_t > 0.0 ? shift(rng) : 0.0;
    out.push_back(shift_methylation(base, theta, base.individual_id + "_copy" + std::to_string(c + 1)));
  }
  return out;
}

PhenotypeDraw simulate_phenotype(const CurveSet& curves, const Eigen::MatrixXd& g, const Eigen::MatrixXd& w,
                                 std::span<const double> snp_positions, const SimConfig& config, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(curves.size());
  if (g.rows() != n || w.rows() != n) throw DataError("phenotype inputs have inconsistent row counts");
  if (w.cols() != static_cast<Eigen::Index>(config.zeta.size())) throw DataError("covariates do not match zeta");
  if (g.cols() != config.d) throw DataError("genotypes do not match the configured number of SNPs");
  const Eigen::VectorXd delta_term = curves.values * delta_weights(config.delta, curves.grid);
  const Eigen::MatrixXd omega =
      interaction_design(curves, config.weight_spec, std::vector<double>(snp_positions.begin(), snp_positions.end()));
  const auto eta = config.eta_or_zero();
  Eigen::VectorXd signal = main_signal(config, w, g, delta_term) + interaction_signal(g, omega, eta);
  const Eigen::VectorXd noise = draw_noise(config, static_cast<int>(n), rng);
  return finish_phenotype(std::move(signal), noise, config);
}

SimulationContext::SimulationContext(const SimConfig& config) : config_(config) {
  config_.validate();
  Rng rng(stream_seed(config_.seed, kProfileStream));
  bases_ = synthesize_base_profiles(config_.profiles, rng);
  range_ = genomic_range(bases_);
  grid_ = uniform_grid(config_.smoothing.grid_size);
  for (const auto& b : bases_) {
    smoothers_.emplace_back(b.positions(), grid_, range_, config_.smoothing);
  }
  delta_weights_ = delta_weights(config_.delta, grid_);
}

std::vector<MethylationSample> SimulationContext::replicate_samples(int n, Rng& rng) const {
  const int count = static_cast<int>(bases_.size());
  std::vector<std::vector<MethylationSample>> copies(bases_.size());
  for (int b = 0; b < count; ++b) {
    const int members = n > b ? (n - b + count - 1) / count : 0;
    if (members > 1) copies[static_cast<std::size_t>(b)] = replicate_methylation(bases_[b], members - 1, config_.sigma_t, rng);
  }
  std::vector<MethylationSample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto b = static_cast<std::size_t>(i % count);
    const int copy = i / count;
    MethylationSample s = copy == 0 ? bases_[b] : copies[b][static_cast<std::size_t>(copy - 1)];
    s.individual_id = individual_name(i);
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

struct DrawPrefix {
  Genotypes genotypes;
  Eigen::MatrixXd w;
  std::vector<double> snp_positions;
};

DrawPrefix draw_prefix(const SimConfig& config, int n, Rng& rng) {
  DrawPrefix out;
  out.genotypes = simulate_genotypes(n, config.d, config.maf_lo, config.maf_hi, rng);
  out.w = draw_covariates(config, n, rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  out.snp_positions.resize(static_cast<std::size_t>(config.d));
  for (auto& u : out.snp_positions) u = unit(rng);
  return out;
}

}  // namespace

ReplicateDraw SimulationContext::draw(int n, std::uint64_t replicate) const {
  if (n < 2) throw UsageError("sample size must be at least 2");
  Rng rng(stream_seed(config_.seed, replicate));
  auto prefix = draw_prefix(config_, n, rng);
  const auto samples = replicate_samples(n, rng);

  ReplicateDraw out;
  out.genotypes = std::move(prefix.genotypes);
  out.w = std::move(prefix.w);
  out.snp_positions = std::move(prefix.snp_positions);
  out.curves.grid = grid_;
  out.curves.scaling = range_;
  out.curves.values.resize(n, static_cast<Eigen::Index>(grid_.size()));
  for (const auto& sample : samples) out.curves.ids.push_back(sample.individual_id);
  // Individuals sharing a base profile share site positions, so each group
  // is smoothed with one matrix product.
  const int count = static_cast<int>(bases_.size());
  for (int b = 0; b < count && b < n; ++b) {
    const auto& op = smoothers_[static_cast<std::size_t>(b)];
    const int members = (n - b + count - 1) / count;
    Eigen::MatrixXd levels(op.site_count(), members);
    for (int c = 0; c < members; ++c) {
      const auto& sites = samples[static_cast<std::size_t>(b + c * count)].sites;
      for (int j = 0; j < op.site_count(); ++j) levels(j, c) = sites[static_cast<std::size_t>(j)].level;
    }
    const Eigen::MatrixXd smoothed = op.weights() * levels;
    for (int c = 0; c < members; ++c) out.curves.values.row(b + c * count) = smoothed.col(c).transpose();
  }
  out.base_signal = main_signal(config_, out.w, out.genotypes.g, out.curves.values * delta_weights_);
  out.noise = draw_noise(config_, n, rng);
  return out;
}

std::vector<MethylationSample> SimulationContext::methylation(int n, std::uint64_t replicate) const {
  Rng rng(stream_seed(config_.seed, replicate));
  draw_prefix(config_, n, rng);
  return replicate_samples(n, rng);
}

PhenotypeDraw phenotype_from_draw(const ReplicateDraw& draw, const SimConfig& config, std::span<const double> eta,
                                  const Eigen::MatrixXd& omega) {
  Eigen::VectorXd signal = draw.base_signal + interaction_signal(draw.genotypes.g, omega, eta);
  return finish_phenotype(std::move(signal), draw.noise, config);
}

Dataset to_dataset(const ReplicateDraw& draw, const Eigen::VectorXd& y) {
  Dataset out;
  out.y = y;
  out.w = draw.w;
  out.g = draw.genotypes.g;
  out.snp_positions = draw.snp_positions;
  for (std::size_t d = 0; d < draw.snp_positions.size(); ++d) out.snp_ids.push_back("snp_" + std::to_string(d + 1));
  out.curves = draw.curves;
  return out;
}

SimulatedData simulate_dataset(const SimulationContext& context, std::uint64_t replicate) {
  const auto& config = context.config();
  const ReplicateDraw draw = context.draw(config.n, replicate);
  const Eigen::MatrixXd omega = interaction_design(draw.curves, config.weight_spec, draw.snp_positions);
  SimulatedData out;
  out.phenotype = phenotype_from_draw(draw, config, config.eta_or_zero(), omega);
  out.dataset = to_dataset(draw, out.phenotype.y);
  out.methylation = context.methylation(config.n, replicate);
  const auto range = context.range();
  for (double u : draw.snp_positions) out.snp_positions_bp.push_back(range.t_min + u * (range.t_max - range.t_min));
  out.maf = draw.genotypes.maf;
  return out;
}

const ComparisonScenario& comparison_scenario(int index) {
  if (index < 1 || index > static_cast<int>(kComparisonScenarios.size())) {
    throw UsageError("comparison scenario must be between 1 and 5");
  }
  return kComparisonScenarios[static_cast<std::size_t>(index - 1)];
}

void ArrayDesign::validate() const {
  if (n < 8) throw UsageError("sample size must be at least 8");
  if (cpg_count < 2) throw UsageError("array design needs at least two CpGs");
  if (!(region_length >= cpg_count)) throw UsageError("region too short for the requested number of CpGs");
  if (profiles < 1) throw UsageError("profile count must be positive");
  if (sinusoids < 0) throw UsageError("sinusoid count must be non-negative");
  if (!(site_noise_sd >= 0.0) || !(sigma_t >= 0.0)) throw UsageError("noise scales must be non-negative");
  if (!(maf > 0.0 && maf < 0.5)) throw UsageError("MAF must lie in (0, 0.5)");
  if (!(age_lo <= age_hi)) throw UsageError("age range is reversed");
  if (!(male_fraction >= 0.0 && male_fraction <= 1.0)) throw UsageError("male fraction must lie in [0,1]");
  mixture.validate();
  smoothing.validate();
}

ArrayContext::ArrayContext(const ArrayDesign& design) : design_(design) {
  design_.validate();
  Rng rng(stream_seed(design_.seed, kProfileStream));
  std::uniform_int_distribution<long long> offset(0, static_cast<long long>(design_.region_length));
  std::set<long long> picked;
  while (static_cast<int>(picked.size()) < design_.cpg_count) picked.insert(offset(rng));
  for (long long p : picked) positions_.push_back(design_.region_start + static_cast<double>(p));

  const auto m = static_cast<Eigen::Index>(positions_.size());
  base_logits_.resize(design_.profiles, m);
  for (int b = 0; b < design_.profiles; ++b) {
    const auto latent = draw_latent(design_.sinusoids, rng);
    for (Eigen::Index j = 0; j < m; ++j) {
      base_logits_(b, j) = latent((positions_[static_cast<std::size_t>(j)] - design_.region_start) / design_.region_length);
    }
  }

  snp_bp_ = design_.region_start + 0.5 * design_.region_length;
  nearest_.resize(positions_.size());
  for (std::size_t j = 0; j < nearest_.size(); ++j) nearest_[j] = static_cast<int>(j);
  std::stable_sort(nearest_.begin(), nearest_.end(), [this](int a, int b) {
    return std::abs(positions_[static_cast<std::size_t>(a)] - snp_bp_) <
           std::abs(positions_[static_cast<std::size_t>(b)] - snp_bp_);
  });

  range_ = {positions_.front(), positions_.back()};
  grid_ = uniform_grid(design_.smoothing.grid_size);
  smoother_ = SmoothingOperator(positions_, grid_, range_, design_.smoothing).weights();
}

ArrayDraw ArrayContext::draw(std::uint64_t replicate, bool smooth_curves) const {
  Rng rng(stream_seed(design_.seed, replicate));
  const int n = design_.n;
  const auto m = static_cast<Eigen::Index>(positions_.size());
  ArrayDraw out;
  const std::array<double, 1> maf{design_.maf};
  out.g = simulate_genotypes_with_maf(n, maf, rng);

  std::uniform_real_distribution<double> age(design_.age_lo, design_.age_hi);
  std::bernoulli_distribution male(design_.male_fraction);
  out.w.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    out.w(i, 0) = age(rng);
    out.w(i, 1) = male(rng) ? 1.0 : 0.0;
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  out.levels.resize(n, m);
  for (int i = 0; i < n; ++i) {
    const auto b = i % design_.profiles;
    const double shift = i < design_.profiles ? 0.0 : design_.sigma_t * normal(rng);
    for (Eigen::Index j = 0; j < m; ++j) {
      out.levels(i, j) = logistic(base_logits_(b, j) + shift + design_.site_noise_sd * normal(rng));
    }
  }

  out.curves.grid = grid_;
  out.curves.scaling = range_;
  if (smooth_curves) out.curves.values = out.levels * smoother_.transpose();
  for (int i = 0; i < n; ++i) out.curves.ids.push_back(individual_name(i));

  out.noise.resize(n);
  for (int i = 0; i < n; ++i) out.noise[i] = design_.mixture.draw(rng);
  return out;
}

Eigen::VectorXd comparison_phenotype(const ArrayDraw& draw, const ComparisonScenario& scenario, double gamma,
                                     std::span<const int> nearest) {
  if (scenario.interacting_cpgs < 1 || static_cast<std::size_t>(scenario.interacting_cpgs) > nearest.size()) {
    throw DataError("scenario has more interacting CpGs than the array provides");
  }
  Eigen::VectorXd cpg_sum = Eigen::VectorXd::Zero(draw.levels.rows());
  for (int k = 0; k < scenario.interacting_cpgs; ++k) cpg_sum += draw.levels.col(nearest[static_cast<std::size_t>(k)]);
  const Eigen::VectorXd g = draw.g.col(0);
  Eigen::VectorXd y = Eigen::VectorXd::Constant(g.size(), scenario.intercept) + scenario.age * draw.w.col(0) +
                      scenario.sex * draw.w.col(1) + scenario.snp * g + scenario.cpg * cpg_sum +
                      gamma * g.cwiseProduct(cpg_sum);
  return y + draw.noise;
}

}  // namespace methsnp
