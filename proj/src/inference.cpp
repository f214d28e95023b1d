#include "methsnp/inference.hpp"

#include "methsnp/distributions.hpp"
#include "methsnp/error.hpp"
#include "numeric.hpp"
#include "text_format.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <ostream>

namespace methsnp {

TestResult wald_interaction_test(const FittedModel& fit) {
  const auto& dims = fit.dims;
  if (dims.d < 1) throw DataError("fit has no interaction coefficients");
  if (fit.theta.size() != dims.total() || fit.cov_theta.rows() != dims.total()) {
    throw DataError("fitted model is inconsistent with its dimensions");
  }
  TestResult out;
  out.df1 = dims.d;
  out.df2 = dims.n - dims.s - dims.l - 2 * dims.d - 1;
  if (out.df2 < 1) throw DataError("non-positive denominator degrees of freedom");
  out.eta_hat = fit.eta();
  out.eta_cov = fit.eta_cov();

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.eta_cov, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > detail::kMaxCondition) {
    throw NumericalError("degenerate interaction covariance");
  }
  const Eigen::LLT<Eigen::MatrixXd> chol(out.eta_cov);
  if (chol.info() != Eigen::Success) throw NumericalError("degenerate interaction covariance");
  out.statistic = out.eta_hat.dot(chol.solve(out.eta_hat)) / dims.d;
  out.p_value = f_upper_tail(out.statistic, out.df1, out.df2);
  return out;
}

nlohmann::json to_json(const TestResult& result) {
  std::vector<double> eta(result.eta_hat.data(), result.eta_hat.data() + result.eta_hat.size());
  std::vector<double> cov;
  for (Eigen::Index i = 0; i < result.eta_cov.rows(); ++i) {
    for (Eigen::Index j = 0; j < result.eta_cov.cols(); ++j) cov.push_back(result.eta_cov(i, j));
  }
  return {{"statistic", result.statistic}, {"df1", result.df1},   {"df2", result.df2},
          {"p_value", result.p_value},     {"eta_hat", eta},      {"eta_cov", cov}};
}

BaselineResult pairwise_baseline(const BaselineInput& input, int snp_index, double window_bp, double alpha) {
  const Eigen::Index n = input.y.size();
  const Eigen::Index m = static_cast<Eigen::Index>(input.cpg_positions.size());
  if (input.w.rows() != n || input.g.rows() != n || input.cpg_levels.rows() != n || input.cpg_levels.cols() != m) {
    throw DataError("baseline input blocks have inconsistent dimensions");
  }
  if (snp_index < 0 || snp_index >= input.g.cols() ||
      static_cast<std::size_t>(snp_index) >= input.snp_positions.size()) {
    throw DataError("baseline SNP index out of range");
  }
  if (!(window_bp > 0.0)) throw UsageError("baseline window must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("baseline alpha must lie in (0,1)");

  const double u = input.snp_positions[static_cast<std::size_t>(snp_index)];
  const Eigen::Index s = input.w.cols();
  const Eigen::Index q = s + 4;
  const Eigen::VectorXd gd = input.g.col(snp_index);

  // Columns shared by every pair model: [1 | W | G_d].
  Eigen::MatrixXd fixed(n, s + 2);
  fixed.col(0).setOnes();
  fixed.block(0, 1, n, s) = input.w;
  fixed.col(s + 1) = gd;
  const Eigen::MatrixXd ftf = fixed.transpose() * fixed;
  const Eigen::VectorXd fty = fixed.transpose() * input.y;

  BaselineResult out;
  out.alpha = alpha;
  for (Eigen::Index j = 0; j < m; ++j) {
    if (!(std::abs(input.cpg_positions[j] - u) < window_bp)) continue;
    BaselinePair pair;
    pair.snp_index = snp_index;
    pair.cpg_position = input.cpg_positions[j];

    const Eigen::VectorXd pj = input.cpg_levels.col(j);
    const Eigen::VectorXd inter = gd.cwiseProduct(pj);
    Eigen::MatrixXd xtx(q, q);
    xtx.topLeftCorner(s + 2, s + 2) = ftf;
    xtx.block(0, s + 2, s + 2, 1) = fixed.transpose() * pj;
    xtx.block(0, s + 3, s + 2, 1) = fixed.transpose() * inter;
    xtx.block(s + 2, 0, 1, s + 2) = xtx.block(0, s + 2, s + 2, 1).transpose();
    xtx.block(s + 3, 0, 1, s + 2) = xtx.block(0, s + 3, s + 2, 1).transpose();
    xtx(s + 2, s + 2) = pj.squaredNorm();
    xtx(s + 3, s + 3) = inter.squaredNorm();
    xtx(s + 2, s + 3) = xtx(s + 3, s + 2) = pj.dot(inter);
    Eigen::VectorXd xty(q);
    xty << fty, pj.dot(input.y), inter.dot(input.y);

    try {
      if (n - q < 1) throw NumericalError("no residual degrees of freedom");
      const detail::GuardedCholesky chol(xtx, detail::kMaxCondition, "collinear pair model");
      const Eigen::VectorXd beta = chol.solve(xty);
      const Eigen::VectorXd resid = input.y - fixed * beta.head(s + 2) - pj * beta[s + 2] - inter * beta[s + 3];
      const double sigma2 = resid.squaredNorm() / static_cast<double>(n - q);
      Eigen::VectorXd unit = Eigen::VectorXd::Zero(q);
      unit[q - 1] = 1.0;
      const double var_gamma = sigma2 * chol.solve(unit)[q - 1];
      pair.gamma_hat = beta[q - 1];
      if (!(var_gamma > 0.0)) throw NumericalError("zero variance for interaction coefficient");
      pair.p_value = t_two_sided(pair.gamma_hat / std::sqrt(var_gamma), static_cast<double>(n - q));
    } catch (const NumericalError&) {
      pair.p_value = 1.0;
      pair.collinear = true;
    }
    out.pairs.push_back(pair);
  }
  if (out.pairs.empty()) throw DataError("empty window");
  out.n_tests = static_cast<int>(out.pairs.size());
  out.threshold = alpha / out.n_tests;
  for (const auto& pair : out.pairs) {
    if (pair.p_value < out.threshold) out.significant.push_back(pair);
  }
  return out;
}

nlohmann::json to_json(const BaselineResult& result) {
  auto pair_json = [](const BaselinePair& p) {
    return nlohmann::json{{"snp_index", p.snp_index},
                          {"cpg_position", p.cpg_position},
                          {"gamma_hat", p.gamma_hat},
                          {"p_value", p.p_value},
                          {"collinear", p.collinear}};
  };
  nlohmann::json pairs = nlohmann::json::array();
  nlohmann::json significant = nlohmann::json::array();
  for (const auto& p : result.pairs) pairs.push_back(pair_json(p));
  for (const auto& p : result.significant) significant.push_back(pair_json(p));
  return {{"n_tests", result.n_tests},
          {"alpha", result.alpha},
          {"threshold", result.threshold},
          {"pairs", pairs},
          {"significant", significant}};
}

void write_baseline_csv(std::ostream& out, const BaselineResult& result) {
  out << "snp,cpg_position,gamma_hat,p_value,significant\n";
  for (const auto& p : result.pairs) {
    out << (p.snp_index + 1) << ',' << format_double(p.cpg_position) << ',' << format_double(p.gamma_hat) << ','
        << format_double(p.p_value) << ',' << (p.p_value < result.threshold ? 1 : 0) << '\n';
  }
}

WorkingResiduals logistic_working_residuals(const Eigen::VectorXd& binary_y, const Eigen::MatrixXd& covariates) {
  const Eigen::Index n = binary_y.size();
  if (n == 0) throw DataError("logistic regression: empty response");
  if (covariates.rows() != n && covariates.cols() > 0) {
    throw DataError("logistic regression: covariate rows do not match response length");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (binary_y[i] != 0.0 && binary_y[i] != 1.0) {
      throw DataError("binary response must be 0 or 1 (row " + std::to_string(i + 1) + ")");
    }
  }

  std::vector<Eigen::Index> kept;
  for (Eigen::Index c = 0; c < covariates.cols(); ++c) {
    const auto col = covariates.col(c);
    if (col.maxCoeff() > col.minCoeff()) kept.push_back(c);
  }
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(kept.size()) + 1);
  x.col(0).setOnes();
  for (std::size_t k = 0; k < kept.size(); ++k) x.col(static_cast<Eigen::Index>(k) + 1) = covariates.col(kept[k]);

  constexpr int kMaxIterations = 200;
  constexpr double kGradientTolerance = 1e-8;
  constexpr double kStepTolerance = 1e-6;
  constexpr double kDivergence = 1e3;
  const auto separation = [] {
    return NumericalError("logistic regression: perfect separation (coefficients diverge)");
  };

  // Under separation the gradient still shrinks geometrically while Newton
  // steps stay O(1), so convergence also requires a vanishing step.
  WorkingResiduals out;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
  Eigen::VectorXd mu(n);
  for (int iter = 1;; ++iter) {
    if (iter > kMaxIterations) throw separation();
    mu = (x * beta).unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); });
    const Eigen::VectorXd gradient = x.transpose() * (binary_y - mu);
    const Eigen::VectorXd weight = mu.cwiseProduct((1.0 - mu.array()).matrix());
    const Eigen::MatrixXd info = x.transpose() * weight.asDiagonal() * x;
    const Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() != Eigen::Success) throw separation();
    const Eigen::VectorXd step = llt.solve(gradient);
    out.iterations = iter;
    if (gradient.norm() <= kGradientTolerance && step.norm() <= kStepTolerance * (1.0 + beta.norm())) break;
    beta += step;
    if (!beta.allFinite() || beta.norm() > kDivergence) throw separation();
  }
  out.fitted = mu;
  out.coefficients = beta;
  out.residuals = (binary_y - mu).cwiseQuotient(mu.cwiseProduct((1.0 - mu.array()).matrix()));
  return out;
}

}  // namespace methsnp
