#include "methsnp/error.hpp"
#include "methsnp/simgen.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

namespace methsnp {
namespace {

SimConfig small_config() {
  SimConfig c;
  c.n = 40;
  c.d = 5;
  c.profiles.sites = 120;
  c.smoothing.grid_size = 201;
  return c;
}

TEST(Simgen, StreamSeedsAreDistinctAndStable) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t r = 0; r < 1000; ++r) seen.insert(stream_seed(42, r));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(stream_seed(42, 7), stream_seed(42, 7));
  EXPECT_NE(stream_seed(42, 7), stream_seed(43, 7));
}

TEST(Simgen, DefaultAlphaCyclesReferenceTable) {
  const auto a = default_alpha(23);
  ASSERT_EQ(a.size(), 23u);
  EXPECT_EQ(a[0], 1.20);
  EXPECT_EQ(a[19], 0.50);
  EXPECT_EQ(a[20], 1.20);
  EXPECT_EQ(a[22], 0.80);
}

TEST(Simgen, GenotypesAreBinomialCountsWithinMafRange) {
  Rng rng(1);
  const Genotypes g = simulate_genotypes(4000, 6, 0.05, 0.2, rng);
  for (int k = 0; k < 6; ++k) {
    EXPECT_GE(g.maf[k], 0.05);
    EXPECT_LT(g.maf[k], 0.2);
    const double freq = g.g.col(k).mean() / 2.0;
    EXPECT_NEAR(freq, g.maf[k], 4.0 * std::sqrt(g.maf[k] * (1 - g.maf[k]) / 8000.0));
    for (int i = 0; i < 4000; ++i) EXPECT_TRUE(g.g(i, k) == 0.0 || g.g(i, k) == 1.0 || g.g(i, k) == 2.0);
  }
}

TEST(Simgen, MixtureMomentsMatchClosedForm) {
  const MixtureNoise m;
  const double mean = 0.75 * -1.256 + 0.25 * 3.815;
  const double second = 0.75 * (0.2559 + 1.256 * 1.256) + 0.25 * (0.4684 + 3.815 * 3.815);
  EXPECT_NEAR(m.mean(), mean, 1e-12);
  EXPECT_NEAR(m.variance(), second - mean * mean, 1e-12);
  Rng rng(3);
  const int n = 200000;
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = m.draw(rng);
    sum += x;
    sq += x * x;
  }
  const double sample_mean = sum / n;
  EXPECT_NEAR(sample_mean, mean, 4.0 * std::sqrt(m.variance() / n));
  EXPECT_NEAR(sq / n - sample_mean * sample_mean, m.variance(), 0.05);
  MixtureNoise bad;
  bad.first.weight = 0.5;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Simgen, ShiftMovesLevelsOnLogitScale) {
  MethylationSample base;
  base.individual_id = "b";
  base.sites = {{10.0, 0.5}, {20.0, 0.0}, {30.0, 0.9}};
  const auto shifted = shift_methylation(base, 1.0, "s");
  EXPECT_EQ(shifted.individual_id, "s");
  EXPECT_EQ(shifted.sites[1].position, 20.0);
  EXPECT_NEAR(shifted.sites[0].level, 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  const double clamped = std::log(kLogitClamp / (1.0 - kLogitClamp)) + 1.0;
  EXPECT_NEAR(shifted.sites[1].level, 1.0 / (1.0 + std::exp(-clamped)), 1e-15);
}

TEST(Simgen, BaseProfilesHaveConfiguredShape) {
  ProfileConfig c;
  Rng rng(5);
  const auto bases = synthesize_base_profiles(c, rng);
  ASSERT_EQ(bases.size(), 8u);
  for (const auto& b : bases) {
    EXPECT_EQ(b.sites.size(), 300u);
    EXPECT_NO_THROW(b.validate());
    EXPECT_GE(b.sites.front().position, c.region_start);
    EXPECT_LE(b.sites.back().position, c.region_start + c.region_length);
  }
}

TEST(Simgen, ReplicatesAreDeterministicAndIndependent) {
  const SimulationContext context(small_config());
  const SimulatedData a = simulate_dataset(context, 3);
  const SimulatedData b = simulate_dataset(context, 3);
  const SimulatedData c = simulate_dataset(context, 4);
  EXPECT_EQ(a.dataset.y, b.dataset.y);
  EXPECT_EQ(a.dataset.g, b.dataset.g);
  EXPECT_EQ(a.dataset.curves.values, b.dataset.curves.values);
  EXPECT_NE(a.dataset.y, c.dataset.y);

  const SimulationContext again(small_config());
  EXPECT_EQ(simulate_dataset(again, 3).dataset.y, a.dataset.y);
}

TEST(Simgen, DatasetShapeAndSnpPositions) {
  const SimulationContext context(small_config());
  const SimulatedData sim = simulate_dataset(context, 0);
  const Dataset& ds = sim.dataset;
  EXPECT_EQ(ds.n(), 40);
  EXPECT_EQ(ds.d(), 5);
  EXPECT_EQ(ds.s(), 1);
  EXPECT_NO_THROW(ds.validate());
  for (double u : ds.snp_positions) {
    EXPECT_GE(u, 0.0);
    EXPECT_LE(u, 1.0);
  }
  EXPECT_EQ(sim.methylation.size(), 40u);
  EXPECT_EQ(sim.methylation[0].individual_id, ds.curves.ids[0]);
  // The first `count` individuals carry the unshifted base profiles.
  EXPECT_EQ(sim.methylation[3].sites[7].level, context.base_profiles()[3].sites[7].level);
  // Individuals sharing a base share site positions.
  EXPECT_EQ(sim.methylation[11].positions(), context.base_profiles()[3].positions());
}

TEST(Simgen, PairedDrawsShareEverythingButInteraction) {
  SimConfig config = small_config();
  const SimulationContext context(config);
  const ReplicateDraw draw = context.draw(config.n, 2);
  const Eigen::MatrixXd omega = interaction_design(draw.curves, config.weight_spec, draw.snp_positions);
  const std::vector<double> zero(5, 0.0);
  const std::vector<double> some(5, 2.0);
  const PhenotypeDraw h0 = phenotype_from_draw(draw, config, zero, omega);
  const PhenotypeDraw h1 = phenotype_from_draw(draw, config, some, omega);
  Eigen::VectorXd interaction = Eigen::VectorXd::Zero(config.n);
  for (int d = 0; d < 5; ++d) interaction += 2.0 * draw.genotypes.g.col(d).cwiseProduct(omega.col(d));
  EXPECT_LT((h1.signal - h0.signal - interaction).cwiseAbs().maxCoeff(), 1e-12);

  config.eta = some;
  const SimulatedData sim = simulate_dataset(SimulationContext(config), 2);
  EXPECT_LT((sim.phenotype.signal - h1.signal).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Simgen, GaussianNoiseHitsSignalToNoiseRatio) {
  SimConfig config = small_config();
  config.n = 400;
  const SimulatedData sim = simulate_dataset(SimulationContext(config), 0);
  const auto& s = sim.phenotype.signal;
  const double var = (s.array() - s.mean()).square().sum() / (s.size() - 1);
  EXPECT_NEAR(sim.phenotype.sigma2, var / 10.0, 1e-12 * var);
}

TEST(Simgen, ConfigValidation) {
  SimConfig c;
  c.n = 7;
  EXPECT_THROW(c.validate(), Error);
  c = SimConfig{};
  c.maf_hi = 0.5;
  EXPECT_THROW(c.validate(), Error);
  c = SimConfig{};
  c.profiles.sites = 49;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_EQ(parse_noise_kind("mixture"), NoiseKind::mixture);
  EXPECT_THROW(parse_noise_kind("laplace"), Error);
}

TEST(ArrayDesign, NearestCpgsAndDraws) {
  ArrayDesign design;
  design.n = 60;
  design.cpg_count = 200;
  design.smoothing.grid_size = 201;
  const ArrayContext context(design);
  const auto& pos = context.cpg_positions();
  ASSERT_EQ(pos.size(), 200u);
  EXPECT_TRUE(std::is_sorted(pos.begin(), pos.end()));
  const auto& near = context.nearest();
  for (std::size_t j = 1; j < near.size(); ++j) {
    EXPECT_LE(std::abs(pos[near[j - 1]] - context.snp_position_bp()), std::abs(pos[near[j]] - context.snp_position_bp()));
  }
  const ArrayDraw a = context.draw(1);
  const ArrayDraw b = context.draw(1, false);
  EXPECT_EQ(a.levels, b.levels);
  EXPECT_EQ(a.g, b.g);
  EXPECT_EQ(a.curves.size(), 60);
  EXPECT_LT((a.curves.values - a.levels * context.smoother().transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GE(a.w.col(0).minCoeff(), design.age_lo);
  EXPECT_LE(a.w.col(0).maxCoeff(), design.age_hi);

  const auto& scenario = comparison_scenario(3);
  const Eigen::VectorXd y0 = comparison_phenotype(a, scenario, 0.0, near);
  const Eigen::VectorXd y1 = comparison_phenotype(a, scenario, 0.5, near);
  Eigen::VectorXd product = Eigen::VectorXd::Zero(60);
  for (int j = 0; j < scenario.interacting_cpgs; ++j) product += a.g.col(0).cwiseProduct(a.levels.col(near[j]));
  EXPECT_LT((y1 - y0 - 0.5 * product).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(comparison_scenario(6), Error);
}

}  // namespace
}  // namespace methsnp
