#pragma once

#include "methsnp/basis.hpp"
#include "methsnp/curves.hpp"

#include <Eigen/Dense>

#include <nlohmann/json_fwd.hpp>

#include <string>
#include <vector>

namespace methsnp {

// Phenotype, covariates, genotypes and methylation curves for N individuals.
struct Dataset {
  Eigen::VectorXd y;               // N
  Eigen::MatrixXd w;               // N x S covariates (S may be 0)
  Eigen::MatrixXd g;               // N x D minor-allele counts in {0,1,2}
  std::vector<double> snp_positions;  // u_d in [0,1]
  std::vector<std::string> snp_ids;
  CurveSet curves;

  int n() const { return static_cast<int>(y.size()); }
  int s() const { return static_cast<int>(w.cols()); }
  int d() const { return static_cast<int>(g.cols()); }

  // Throws DataError on inconsistent block sizes, missing values, genotypes
  // outside {0,1,2}, SNP positions outside [0,1] or D == 0.
  void validate() const;
};

struct ModelDims {
  int n = 0;
  int s = 0;
  int d = 0;
  int l = 0;

  int fixed() const { return 1 + s + 2 * d; }
  int total() const { return fixed() + l; }
  int intercept_index() const { return 0; }
  int zeta_offset() const { return 1; }
  int alpha_offset() const { return 1 + s; }
  int eta_offset() const { return 1 + s + d; }
  int b_offset() const { return fixed(); }
  bool operator==(const ModelDims&) const = default;
};

// Design matrices with fixed column order (intercept, zeta, alpha, eta, b).
struct DesignBlocks {
  Eigen::MatrixXd x;  // N x (1 + S + 2D): [1 | W | G | K]
  Eigen::MatrixXd z;  // N x L functional covariates
  ModelDims dims;

  Eigen::MatrixXd a() const;  // [X | Z]
};

// Functional covariates Z (N x L) for every curve in the set.
Eigen::MatrixXd functional_design(const CurveSet& curves, const SplineBasis& basis);

// Omega (N x D) for every curve in the set.
Eigen::MatrixXd interaction_design(const CurveSet& curves, const WeightSpec& spec,
                                   const std::vector<double>& snp_positions);

// Builds the blocks from precomputed Z and Omega. K = G .* Omega.
// Throws DataError naming monomorphic SNPs, constant covariates, all-zero
// blocks, or the columns that make X rank deficient.
DesignBlocks assemble_design(const Eigen::MatrixXd& w, const Eigen::MatrixXd& g,
                             const Eigen::MatrixXd& omega, const Eigen::MatrixXd& z);

DesignBlocks assemble_design(const Dataset& dataset, const SplineBasis& basis,
                             const WeightSpec& weight_spec);

// P + eps*I with eps = 1e-8 * mean(diag P). Makes the penalty invertible so
// the spline coefficients have a proper Gaussian prior.
Eigen::MatrixXd regularize_penalty(const Eigen::MatrixXd& penalty);

// Penalized normal matrix A'A + blockdiag(0, lambda * penalty).
Eigen::MatrixXd penalized_normal_matrix(const DesignBlocks& blocks, double lambda,
                                        const Eigen::MatrixXd& penalty);

// theta = (A'A + S_lambda)^{-1} A'Y. `penalty` may be singular (PSD) as long
// as the penalized normal matrix is positive definite.
Eigen::VectorXd penalized_solve(const DesignBlocks& blocks, const Eigen::VectorXd& y, double lambda,
                                const Eigen::MatrixXd& penalty);

// Restricted log-likelihood with sigma^2 profiled out, evaluated in the
// (1+S+2D+L)-dimensional mixed-model form:
//   -1/2 { (N-p) (log s2 + 1) + log|A'A + S_lambda| - log|lambda P| }
// where p = 1+S+2D and s2 = (|Y - A theta|^2 + lambda b'Pb) / (N - p).
// `penalty` must be positive definite (see regularize_penalty).
double reml_objective(double lambda, const DesignBlocks& blocks, const Eigen::VectorXd& y,
                      const Eigen::MatrixXd& penalty);

// Closed-form REML sigma^2 at a given lambda.
double reml_sigma2(double lambda, const DesignBlocks& blocks, const Eigen::VectorXd& y,
                   const Eigen::MatrixXd& penalty);

// Spectral form of the profiled REML criterion. After one O(N p^2)
// factorization every evaluation costs O(L), which is what the optimizer uses.
// Values equal reml_objective; the penalty must be positive definite.
class PreparedDesign;

class RemlProfile {
 public:
  RemlProfile(const DesignBlocks& blocks, const Eigen::VectorXd& y, const Eigen::MatrixXd& penalty);
  RemlProfile(const PreparedDesign& design, const Eigen::VectorXd& y);

  double value(double lambda) const;
  double sigma2(double lambda) const;
  // |Y - A theta|^2 + lambda b'Pb.
  double penalized_rss(double lambda) const;

 private:
  int n_ = 0;
  int fixed_ = 0;
  double log_det_xtx_ = 0.0;
  double rss_full_ = 0.0;       // residual of Y on span [X | Z]
  Eigen::VectorXd eigenvalues_;  // of (M_X Z R^{-1})'(M_X Z R^{-1}), P = R'R
  Eigen::VectorXd projections_;  // squared projections of M_X Y on the eigenvectors
};

struct LambdaSearch {
  double log10_lo = -6.0;
  double log10_hi = 8.0;
  int coarse_points = 29;
  double tolerance = 1e-6;  // in log10(lambda)
};

struct LambdaOptimum {
  double lambda = 0.0;
  double value = 0.0;
  bool at_boundary = false;
};

// Maximizes the REML profile over log10(lambda): coarse grid to bracket the
// global maximum, then golden-section refinement.
LambdaOptimum maximize_reml(const RemlProfile& profile, const LambdaSearch& search = {});

struct FittedModel {
  Eigen::VectorXd theta;
  double lambda = 0.0;
  double sigma2 = 0.0;
  Eigen::MatrixXd cov_theta;
  double reml_value = 0.0;
  ModelDims dims;
  WeightSpec weight_spec;
  std::vector<std::string> warnings;

  Eigen::VectorXd eta() const { return theta.segment(dims.eta_offset(), dims.d); }
  Eigen::MatrixXd eta_cov() const {
    return cov_theta.block(dims.eta_offset(), dims.eta_offset(), dims.d, dims.d);
  }
};

// Factorizations of one design that do not depend on the response, so many
// responses (e.g. interaction magnitudes of one simulated replicate) can be
// fitted against the same covariates. The penalty is the raw roughness
// matrix; it is regularized internally.
class PreparedDesign {
 public:
  using ExtendedMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using ExtendedVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

  PreparedDesign(DesignBlocks blocks, const Eigen::MatrixXd& penalty, const LambdaSearch& search = {});

  const DesignBlocks& blocks() const { return blocks_; }
  const Eigen::MatrixXd& penalty() const { return penalty_; }
  FittedModel fit(const Eigen::VectorXd& y) const;

 private:
  friend class RemlProfile;

  DesignBlocks blocks_;
  Eigen::MatrixXd penalty_;
  LambdaSearch search_;
  Eigen::MatrixXd q_;          // orthonormal basis of span X
  Eigen::MatrixXd projector_;  // eigenvectors' * Zhat'
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd gram_;       // A'A
  ExtendedMatrix design_ext_;  // [X | Z]
  ExtendedMatrix gram_ext_;    // A'A
  double log_det_xtx_ = 0.0;
  double log_det_penalty_ = 0.0;
};

// Fits the penalized model at a given design. The penalty passed in is the
// raw roughness matrix; it is regularized internally.
FittedModel fit_reml(const DesignBlocks& blocks, const Eigen::VectorXd& y,
                     const Eigen::MatrixXd& penalty, const LambdaSearch& search = {});

FittedModel fit_reml(const Dataset& dataset, const SplineBasis& basis, const WeightSpec& weight_spec,
                     const LambdaSearch& search = {});

nlohmann::json to_json(const FittedModel& fit);
FittedModel fitted_model_from_json(const nlohmann::json& doc);

}  // namespace methsnp
