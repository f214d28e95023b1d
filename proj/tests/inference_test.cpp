#include "methsnp/distributions.hpp"
#include "methsnp/error.hpp"
#include "methsnp/inference.hpp"
#include "support.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <random>
#include <sstream>

namespace methsnp {
namespace {

using testing::random_instance;

double boost_f_upper(double x, double d1, double d2) {
  return boost::math::cdf(boost::math::complement(boost::math::fisher_f(d1, d2), x));
}

TEST(Distributions, IncompleteBetaMatchesBoost) {
  for (double a : {0.5, 1.0, 2.5, 10.0, 74.0}) {
    for (double b : {0.5, 1.0, 3.0, 20.0, 150.0}) {
      for (double x : {0.0, 1e-6, 0.01, 0.2, 0.5, 0.77, 0.999, 1.0}) {
        const double oracle = boost::math::ibeta(a, b, x);
        EXPECT_NEAR(incomplete_beta(a, b, x), oracle, 1e-12 + 1e-10 * oracle) << a << " " << b << " " << x;
      }
    }
  }
}

TEST(Distributions, FUpperTailMatchesIncompleteBetaOracle) {
  for (double d1 : {1.0, 2.0, 5.0, 20.0, 40.0}) {
    for (double d2 : {3.0, 10.0, 148.0, 348.0, 5000.0}) {
      for (double x : {0.0, 0.05, 0.5, 1.0, 1.7, 3.0, 8.0, 30.0}) {
        const double oracle = boost_f_upper(x, d1, d2);
        EXPECT_NEAR(f_upper_tail(x, d1, d2), oracle, 1e-8 * std::max(oracle, 1e-300)) << d1 << " " << d2 << " " << x;
      }
    }
  }
}

TEST(Distributions, StudentTTwoSidedMatchesBoost) {
  for (double df : {1.0, 4.0, 30.0, 350.0}) {
    for (double t : {0.0, -0.3, 1.0, 2.5, -6.0, 15.0}) {
      const double oracle =
          2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t(df), std::abs(t)));
      EXPECT_NEAR(t_two_sided(t, df), oracle, 1e-8 * std::max(oracle, 1e-300)) << df << " " << t;
    }
  }
}

// With lambda fixed at its REML value, the fixed effects are the GLS estimates
// in the marginal model.
struct GlsOracle {
  Eigen::VectorXd beta;
  Eigen::MatrixXd cov;
};

GlsOracle gls_oracle(const DesignBlocks& blocks, const Eigen::VectorXd& y, const FittedModel& fit,
                     const Eigen::MatrixXd& raw_penalty) {
  const auto m = testing::mixed_model_oracle(blocks, y, fit.lambda, regularize_penalty(raw_penalty));
  return {m.beta, fit.sigma2 * m.beta_cov_unscaled};
}

TEST(WaldTest, SingleSnpMatchesGlsCoefficientF) {
  for (int trial = 0; trial < 8; ++trial) {
    const auto inst = random_instance(1200 + trial, 60 + 5 * trial, 1, 1, 7);
    const FittedModel fit = fit_reml(inst.blocks, inst.y, inst.penalty);
    const TestResult result = wald_interaction_test(fit);
    const GlsOracle oracle = gls_oracle(inst.blocks, inst.y, fit, inst.penalty);
    const int k = fit.dims.eta_offset();
    const double f = oracle.beta(k) * oracle.beta(k) / oracle.cov(k, k);
    const int df2 = fit.dims.n - fit.dims.s - fit.dims.l - 2 - 1;
    EXPECT_EQ(result.df1, 1);
    EXPECT_EQ(result.df2, df2);
    EXPECT_NEAR(result.statistic, f, 1e-10 * std::max(1.0, f)) << trial;
    const double p = boost_f_upper(f, 1.0, df2);
    EXPECT_NEAR(result.p_value, p, 1e-10) << trial;
  }
}

TEST(WaldTest, MultiSnpQuadraticForm) {
  const auto inst = random_instance(1300, 90, 1, 3, 8);
  const FittedModel fit = fit_reml(inst.blocks, inst.y, inst.penalty);
  const TestResult result = wald_interaction_test(fit);
  const GlsOracle oracle = gls_oracle(inst.blocks, inst.y, fit, inst.penalty);
  const int k = fit.dims.eta_offset();
  const Eigen::VectorXd eta = oracle.beta.segment(k, 3);
  const Eigen::MatrixXd cov = oracle.cov.block(k, k, 3, 3);
  const double t = eta.dot(cov.ldlt().solve(eta)) / 3.0;
  EXPECT_NEAR(result.statistic, t, 1e-9 * std::max(1.0, t));
  EXPECT_EQ(result.df1, 3);
  EXPECT_GE(result.p_value, 0.0);
  EXPECT_LE(result.p_value, 1.0);
  const auto doc = to_json(result);
  EXPECT_EQ(doc.at("df1").get<int>(), 3);
}

BaselineInput baseline_fixture(std::uint64_t seed, int n, int m) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  BaselineInput in;
  in.y.resize(n);
  in.w.resize(n, 2);
  in.g.resize(n, 1);
  in.cpg_levels.resize(n, m);
  for (int j = 0; j < m; ++j) in.cpg_positions.push_back(1000.0 * (j + 1));
  in.snp_positions = {5000.0};
  for (int i = 0; i < n; ++i) {
    in.w(i, 0) = 20.0 + 10.0 * unit(rng);
    in.w(i, 1) = unit(rng) < 0.5 ? 1.0 : 0.0;
    in.g(i, 0) = (unit(rng) < 0.3) + (unit(rng) < 0.3);
    for (int j = 0; j < m; ++j) in.cpg_levels(i, j) = unit(rng);
    in.y(i) = 1.0 + 0.05 * in.w(i, 0) + 3.0 * in.g(i, 0) * in.cpg_levels(i, 3) + normal(rng);
  }
  return in;
}

TEST(Baseline, MatchesIndependentOlsPerPair) {
  const BaselineInput in = baseline_fixture(5, 120, 9);
  const BaselineResult result = pairwise_baseline(in, 0, 3500.0, 0.05);
  // CpGs at 2000..8000 bp lie strictly within 3500 bp of the SNP.
  ASSERT_EQ(result.n_tests, 7);
  EXPECT_NEAR(result.threshold, 0.05 / 7, 1e-15);
  for (const auto& pair : result.pairs) {
    const int j = static_cast<int>(pair.cpg_position / 1000.0) - 1;
    Eigen::MatrixXd x(in.y.size(), 6);
    x.col(0).setOnes();
    x.col(1) = in.w.col(0);
    x.col(2) = in.w.col(1);
    x.col(3) = in.g.col(0);
    x.col(4) = in.cpg_levels.col(j);
    x.col(5) = in.g.col(0).cwiseProduct(in.cpg_levels.col(j));
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    const Eigen::VectorXd beta = qr.solve(in.y);
    const double df = static_cast<double>(in.y.size() - 6);
    const double s2 = (in.y - x * beta).squaredNorm() / df;
    const double se = std::sqrt(s2 * (x.transpose() * x).inverse()(5, 5));
    const double p = 2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t(df), std::abs(beta(5) / se)));
    EXPECT_NEAR(pair.gamma_hat, beta(5), 1e-9 * std::max(1.0, std::abs(beta(5))));
    EXPECT_NEAR(pair.p_value, p, 1e-9 * std::max(p, 1e-12));
    EXPECT_EQ(std::find_if(result.significant.begin(), result.significant.end(),
                           [&](const BaselinePair& s) { return s.cpg_position == pair.cpg_position; }) !=
                  result.significant.end(),
              pair.p_value < result.threshold);
  }
  EXPECT_TRUE(result.any_significant());

  std::ostringstream csv;
  write_baseline_csv(csv, result);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "snp,cpg_position,gamma_hat,p_value,significant");
}

TEST(Baseline, EmptyWindowIsDataError) {
  const BaselineInput in = baseline_fixture(6, 40, 3);
  EXPECT_THROW(pairwise_baseline(in, 0, 100.0, 0.05), DataError);
}

TEST(LogisticStage, MatchesNewtonOracle) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = 300;
  Eigen::MatrixXd w(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    w(i, 0) = normal(rng);
    w(i, 1) = unit(rng) < 0.4 ? 1.0 : 0.0;
    const double eta = -0.3 + 0.8 * w(i, 0) - 0.5 * w(i, 1);
    y(i) = unit(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
  }
  Eigen::MatrixXd x(n, 3);
  x << Eigen::VectorXd::Ones(n), w;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(3);
  for (int it = 0; it < 60; ++it) {
    const Eigen::VectorXd mu = (-(x * beta).array()).exp().unaryExpr([](double e) { return 1.0 / (1.0 + e); });
    const Eigen::VectorXd wt = mu.array() * (1.0 - mu.array());
    beta += (x.transpose() * wt.asDiagonal() * x).ldlt().solve(x.transpose() * (y - mu));
  }
  const Eigen::VectorXd mu = (-(x * beta).array()).exp().unaryExpr([](double e) { return 1.0 / (1.0 + e); });
  const WorkingResiduals r = logistic_working_residuals(y, w);
  EXPECT_LT((r.coefficients - beta).norm(), 1e-7);
  EXPECT_LT((r.fitted - mu).norm(), 1e-7);
  const Eigen::VectorXd expected = (y - mu).array() / (mu.array() * (1.0 - mu.array()));
  EXPECT_LT((r.residuals - expected).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(LogisticStage, SeparationIsNumericalError) {
  Eigen::MatrixXd w(40, 1);
  Eigen::VectorXd y(40);
  for (int i = 0; i < 40; ++i) {
    w(i, 0) = i;
    y(i) = i < 20 ? 0.0 : 1.0;
  }
  EXPECT_THROW(logistic_working_residuals(y, w), NumericalError);
}

}  // namespace
}  // namespace methsnp
