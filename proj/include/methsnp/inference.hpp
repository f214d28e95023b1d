#pragma once

#include "methsnp/model.hpp"

#include <Eigen/Dense>

#include <nlohmann/json_fwd.hpp>

#include <iosfwd>
#include <vector>

namespace methsnp {

struct TestResult {
  double statistic = 0.0;  // T_D
  int df1 = 0;             // D
  int df2 = 0;             // N - S - L - 2D - 1
  double p_value = 1.0;
  Eigen::VectorXd eta_hat;
  Eigen::MatrixXd eta_cov;
};

// Wald-type test of H0: eta = 0. T_D = eta' Sigma^{-1} eta / D referred to
// F(D, N - S - L - 2D - 1). Throws NumericalError("degenerate interaction
// covariance") if the eta block is singular or worse conditioned than 1e12.
TestResult wald_interaction_test(const FittedModel& fit);

nlohmann::json to_json(const TestResult& result);

// Illumina-style CpG measurements shared by all individuals.
struct BaselineInput {
  Eigen::VectorXd y;                    // N
  Eigen::MatrixXd w;                    // N x S
  Eigen::MatrixXd g;                    // N x D
  std::vector<double> snp_positions;    // base pairs
  std::vector<double> cpg_positions;    // base pairs, increasing
  Eigen::MatrixXd cpg_levels;           // N x m raw levels
};

struct BaselinePair {
  int snp_index = 0;  // 0-based
  double cpg_position = 0.0;
  double gamma_hat = 0.0;
  double p_value = 1.0;
  bool collinear = false;
};

struct BaselineResult {
  std::vector<BaselinePair> pairs;
  int n_tests = 0;
  double alpha = 0.05;
  double threshold = 0.05;
  std::vector<BaselinePair> significant;

  bool any_significant() const { return !significant.empty(); }
};

// Pairwise SNP x CpG linear-model tests for every CpG with
// |t_j - u_d| < window_bp: OLS of Y on [1, W, G_d, p_j, G_d p_j] and a t-test
// of the product term. Bonferroni threshold alpha / n_tests.
BaselineResult pairwise_baseline(const BaselineInput& input, int snp_index, double window_bp, double alpha);

nlohmann::json to_json(const BaselineResult& result);
// CSV with header snp,cpg_position,gamma_hat,p_value,significant.
void write_baseline_csv(std::ostream& out, const BaselineResult& result);

struct WorkingResiduals {
  Eigen::VectorXd residuals;   // (y - mu) / (mu (1 - mu))
  Eigen::VectorXd fitted;      // mu
  Eigen::VectorXd coefficients;  // intercept first, then retained covariates
  int iterations = 0;
};

// Logistic regression by IRLS (intercept added; zero-variance covariate
// columns dropped) to gradient norm <= 1e-8. Throws NumericalError on
// separation (coefficient norm above 1e3).
WorkingResiduals logistic_working_residuals(const Eigen::VectorXd& binary_y, const Eigen::MatrixXd& covariates);

}  // namespace methsnp
