#include "methsnp/model.hpp"

#include "methsnp/error.hpp"
#include "numeric.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

namespace methsnp {

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

bool is_constant(const Eigen::VectorXd& column) {
  if (column.size() == 0) return true;
  return (column.array() == column[0]).all();
}

std::string column_name(const ModelDims& dims, Eigen::Index j) {
  const auto col = static_cast<int>(j);
  if (col == 0) return "intercept";
  if (col < dims.alpha_offset()) return "covariate " + std::to_string(col - dims.zeta_offset() + 1);
  if (col < dims.eta_offset()) return "SNP " + std::to_string(col - dims.alpha_offset() + 1);
  return "interaction " + std::to_string(col - dims.eta_offset() + 1);
}

}  // namespace

void Dataset::validate() const {
  const auto rows = y.size();
  if (rows == 0) throw DataError("dataset has no individuals");
  if (g.cols() == 0) throw DataError("dataset has no SNPs (D must be >= 1)");
  if (w.rows() != rows || g.rows() != rows || curves.values.rows() != rows) {
    throw DataError("dataset blocks disagree on the number of individuals");
  }
  if (static_cast<Eigen::Index>(snp_positions.size()) != g.cols()) {
    throw DataError("number of SNP positions does not match genotype columns");
  }
  if (!all_finite(y) || !all_finite(w) || !all_finite(g) || !all_finite(curves.values)) {
    throw DataError("dataset contains missing or non-finite values");
  }
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index d = 0; d < g.cols(); ++d) {
      const double v = g(i, d);
      if (v != 0.0 && v != 1.0 && v != 2.0) {
        throw DataError("genotype outside {0,1,2} at individual " + std::to_string(i + 1) + ", SNP " +
                        std::to_string(d + 1));
      }
    }
  }
  for (double u : snp_positions) {
    if (!(u >= 0.0 && u <= 1.0)) throw DataError("SNP outside scaled region");
  }
}

Eigen::MatrixXd DesignBlocks::a() const {
  Eigen::MatrixXd out(x.rows(), x.cols() + z.cols());
  out << x, z;
  return out;
}

Eigen::MatrixXd functional_design(const CurveSet& curves, const SplineBasis& basis) {
  return curves.values * basis_quadrature(basis, curves.grid);
}

Eigen::MatrixXd interaction_design(const CurveSet& curves, const WeightSpec& spec,
                                   const std::vector<double>& snp_positions) {
  return curves.values * interaction_quadrature(spec, snp_positions, curves.grid);
}

DesignBlocks assemble_design(const Eigen::MatrixXd& w, const Eigen::MatrixXd& g,
                             const Eigen::MatrixXd& omega, const Eigen::MatrixXd& z) {
  const Eigen::Index n = g.rows();
  if (w.rows() != n || omega.rows() != n || z.rows() != n || omega.cols() != g.cols()) {
    throw DataError("design blocks have inconsistent dimensions");
  }
  DesignBlocks blocks;
  blocks.dims = ModelDims{static_cast<int>(n), static_cast<int>(w.cols()), static_cast<int>(g.cols()),
                          static_cast<int>(z.cols())};
  const auto& dims = blocks.dims;

  for (Eigen::Index s = 0; s < w.cols(); ++s) {
    if (is_constant(w.col(s))) {
      throw DataError("constant covariate " + std::to_string(s + 1) +
                      " duplicates the intercept; remove it");
    }
  }
  for (Eigen::Index d = 0; d < g.cols(); ++d) {
    if (is_constant(g.col(d))) throw DataError("monomorphic SNP " + std::to_string(d + 1));
  }
  if (z.cols() > 0 && (z.array() == 0.0).all()) {
    throw DataError("functional covariates are identically zero");
  }

  blocks.x.resize(n, dims.fixed());
  blocks.x.col(0).setOnes();
  blocks.x.block(0, dims.zeta_offset(), n, dims.s) = w;
  blocks.x.block(0, dims.alpha_offset(), n, dims.d) = g;
  blocks.x.block(0, dims.eta_offset(), n, dims.d) = g.cwiseProduct(omega);
  blocks.z = z;

  for (Eigen::Index d = 0; d < g.cols(); ++d) {
    if ((blocks.x.col(dims.eta_offset() + d).array() == 0.0).all()) {
      throw DataError("interaction column for SNP " + std::to_string(d + 1) + " is identically zero");
    }
  }

  // Rank check on unit-norm columns.
  Eigen::MatrixXd normalized = blocks.x;
  for (Eigen::Index j = 0; j < normalized.cols(); ++j) normalized.col(j).normalize();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(normalized);
  qr.setThreshold(1e-10);
  if (qr.rank() < normalized.cols()) {
    std::ostringstream os;
    os << "rank-deficient fixed-effect design; dependent columns:";
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < normalized.cols(); ++k) os << " [" << column_name(dims, perm[k]) << "]";
    throw DataError(os.str());
  }
  return blocks;
}

DesignBlocks assemble_design(const Dataset& dataset, const SplineBasis& basis,
                             const WeightSpec& weight_spec) {
  dataset.validate();
  weight_spec.validate();
  return assemble_design(dataset.w, dataset.g,
                         interaction_design(dataset.curves, weight_spec, dataset.snp_positions),
                         functional_design(dataset.curves, basis));
}

Eigen::MatrixXd regularize_penalty(const Eigen::MatrixXd& penalty) {
  const double eps = 1e-8 * penalty.diagonal().mean();
  Eigen::MatrixXd out = penalty;
  out.diagonal().array() += eps;
  return out;
}

Eigen::MatrixXd penalized_normal_matrix(const DesignBlocks& blocks, double lambda,
                                        const Eigen::MatrixXd& penalty) {
  const int p = blocks.dims.fixed();
  const int l = blocks.dims.l;
  if (penalty.rows() != l || penalty.cols() != l) throw DataError("penalty size does not match basis size");
  Eigen::MatrixXd h(p + l, p + l);
  h.topLeftCorner(p, p).noalias() = blocks.x.transpose() * blocks.x;
  h.topRightCorner(p, l).noalias() = blocks.x.transpose() * blocks.z;
  h.bottomLeftCorner(l, p) = h.topRightCorner(p, l).transpose();
  h.bottomRightCorner(l, l).noalias() = blocks.z.transpose() * blocks.z;
  h.bottomRightCorner(l, l) += lambda * penalty;
  return h;
}

namespace {

Eigen::VectorXd design_crossprod(const DesignBlocks& blocks, const Eigen::VectorXd& y) {
  Eigen::VectorXd out(blocks.dims.total());
  out.head(blocks.dims.fixed()).noalias() = blocks.x.transpose() * y;
  out.tail(blocks.dims.l).noalias() = blocks.z.transpose() * y;
  return out;
}

double penalized_rss_at(const DesignBlocks& blocks, const Eigen::VectorXd& y, double lambda,
                        const Eigen::MatrixXd& penalty, const Eigen::VectorXd& theta) {
  const auto& dims = blocks.dims;
  const Eigen::VectorXd b = theta.tail(dims.l);
  const Eigen::VectorXd resid = y - blocks.x * theta.head(dims.fixed()) - blocks.z * b;
  return resid.squaredNorm() + lambda * b.dot(penalty * b);
}

void check_lambda(double lambda, bool allow_zero) {
  if (!std::isfinite(lambda) || lambda < 0.0 || (!allow_zero && lambda == 0.0)) {
    throw NumericalError("smoothing parameter must be " + std::string(allow_zero ? "non-negative" : "positive"));
  }
}

}  // namespace

Eigen::VectorXd penalized_solve(const DesignBlocks& blocks, const Eigen::VectorXd& y, double lambda,
                                const Eigen::MatrixXd& penalty) {
  check_lambda(lambda, true);
  if (y.size() != blocks.x.rows()) throw DataError("response length does not match design");
  const detail::GuardedCholesky chol(penalized_normal_matrix(blocks, lambda, penalty), detail::kMaxCondition,
                                     "unidentifiable model");
  return chol.solve(design_crossprod(blocks, y));
}

double reml_sigma2(double lambda, const DesignBlocks& blocks, const Eigen::VectorXd& y,
                   const Eigen::MatrixXd& penalty) {
  const Eigen::VectorXd theta = penalized_solve(blocks, y, lambda, penalty);
  return penalized_rss_at(blocks, y, lambda, penalty, theta) / (blocks.dims.n - blocks.dims.fixed());
}

double reml_objective(double lambda, const DesignBlocks& blocks, const Eigen::VectorXd& y,
                      const Eigen::MatrixXd& penalty) {
  check_lambda(lambda, false);
  const auto& dims = blocks.dims;
  const int dof = dims.n - dims.fixed();
  if (dof < 1) throw DataError("insufficient sample size for REML");

  Eigen::LLT<Eigen::MatrixXd> penalty_chol(penalty);
  if (penalty_chol.info() != Eigen::Success) {
    throw NumericalError("REML requires a positive-definite penalty");
  }
  double log_det_penalty = 0.0;
  for (Eigen::Index i = 0; i < penalty.rows(); ++i) {
    log_det_penalty += 2.0 * std::log(penalty_chol.matrixLLT()(i, i));
  }

  const detail::GuardedCholesky chol(penalized_normal_matrix(blocks, lambda, penalty), detail::kMaxCondition,
                                     "unidentifiable model");
  const Eigen::VectorXd theta = chol.solve(design_crossprod(blocks, y));
  const double sigma2 = penalized_rss_at(blocks, y, lambda, penalty, theta) / dof;
  const double value = -0.5 * (dof * (std::log(sigma2) + 1.0) + chol.log_determinant() -
                               dims.l * std::log(lambda) - log_det_penalty);
  if (!std::isfinite(value)) throw NumericalError("non-finite restricted log-likelihood");
  return value;
}

namespace {

struct SpectralPieces {
  Eigen::MatrixXd q;
  Eigen::MatrixXd projector;
  Eigen::VectorXd eigenvalues;
  double log_det_xtx = 0.0;
  double log_det_penalty = 0.0;
};

// With P = U'U and Zhat' = U^{-T} (M_X Z)', the eigenpairs of Zhat' Zhat
// diagonalize every lambda at once.
SpectralPieces spectral_pieces(const DesignBlocks& blocks, const Eigen::MatrixXd& penalty) {
  const int fixed = blocks.dims.fixed();
  if (blocks.dims.n - fixed < 1) throw DataError("insufficient sample size for REML");
  SpectralPieces out;
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(blocks.x);
  out.q = qr.householderQ() * Eigen::MatrixXd::Identity(blocks.x.rows(), fixed);
  const auto r_diag = qr.matrixQR().diagonal();
  for (Eigen::Index i = 0; i < fixed; ++i) out.log_det_xtx += 2.0 * std::log(std::abs(r_diag[i]));

  const Eigen::MatrixXd mz = blocks.z - out.q * (out.q.transpose() * blocks.z);
  Eigen::LLT<Eigen::MatrixXd> penalty_chol(penalty);
  if (penalty_chol.info() != Eigen::Success) {
    throw NumericalError("REML requires a positive-definite penalty");
  }
  for (Eigen::Index i = 0; i < penalty.rows(); ++i) {
    out.log_det_penalty += 2.0 * std::log(penalty_chol.matrixLLT()(i, i));
  }
  const Eigen::MatrixXd zhat_t = penalty_chol.matrixU().transpose().solve(mz.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(zhat_t * zhat_t.transpose());
  out.eigenvalues = eig.eigenvalues().cwiseMax(0.0);
  // Rows of zhat_t are orthogonal to span X, so projecting Y directly
  // equals projecting M_X Y.
  out.projector = eig.eigenvectors().transpose() * zhat_t;
  return out;
}

}  // namespace

RemlProfile::RemlProfile(const DesignBlocks& blocks, const Eigen::VectorXd& y,
                         const Eigen::MatrixXd& penalty)
    : n_(blocks.dims.n), fixed_(blocks.dims.fixed()) {
  if (y.size() != n_) throw DataError("response length does not match design");
  const SpectralPieces pieces = spectral_pieces(blocks, penalty);
  log_det_xtx_ = pieces.log_det_xtx;
  eigenvalues_ = pieces.eigenvalues;
  projections_ = (pieces.projector * y).array().square();
  rss_full_ = y.squaredNorm() - (pieces.q.transpose() * y).squaredNorm();
}

RemlProfile::RemlProfile(const PreparedDesign& design, const Eigen::VectorXd& y)
    : n_(design.blocks_.dims.n), fixed_(design.blocks_.dims.fixed()) {
  if (y.size() != n_) throw DataError("response length does not match design");
  log_det_xtx_ = design.log_det_xtx_;
  eigenvalues_ = design.eigenvalues_;
  projections_ = (design.projector_ * y).array().square();
  rss_full_ = y.squaredNorm() - (design.q_.transpose() * y).squaredNorm();
}

double RemlProfile::penalized_rss(double lambda) const {
  // |M_X y|^2 - sum g_j^2 / (mu_j + lambda)
  return rss_full_ - (projections_.array() / (eigenvalues_.array() + lambda)).sum();
}

double RemlProfile::sigma2(double lambda) const { return penalized_rss(lambda) / (n_ - fixed_); }

double RemlProfile::value(double lambda) const {
  check_lambda(lambda, false);
  const int dof = n_ - fixed_;
  const double s2 = sigma2(lambda);
  if (!(s2 > 0.0)) throw NumericalError("non-positive REML variance estimate");
  const double log_det = (eigenvalues_.array() + lambda).log().sum();
  const double value = -0.5 * (dof * (std::log(s2) + 1.0) + log_det_xtx_ + log_det -
                               static_cast<double>(eigenvalues_.size()) * std::log(lambda));
  if (!std::isfinite(value)) throw NumericalError("non-finite restricted log-likelihood");
  return value;
}

LambdaOptimum maximize_reml(const RemlProfile& profile, const LambdaSearch& search) {
  if (!(search.log10_hi > search.log10_lo) || search.coarse_points < 3) {
    throw UsageError("invalid lambda search interval");
  }
  auto objective = [&profile](double log10_lambda) { return profile.value(std::pow(10.0, log10_lambda)); };

  const int points = search.coarse_points;
  const double step = (search.log10_hi - search.log10_lo) / (points - 1);
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) {
    const double v = objective(search.log10_lo + i * step);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }

  double lo = search.log10_lo + std::max(best - 1, 0) * step;
  double hi = search.log10_lo + std::min(best + 1, points - 1) * step;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = objective(c);
  double fd = objective(d);
  while (hi - lo > search.tolerance) {
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = objective(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = objective(d);
    }
  }
  double x = 0.5 * (lo + hi);
  double fx = objective(x);
  const double grid_x = search.log10_lo + best * step;
  if (best_value > fx) {
    x = grid_x;
    fx = best_value;
  }

  LambdaOptimum out;
  out.lambda = std::pow(10.0, x);
  out.value = fx;
  out.at_boundary = best == 0 || best == points - 1;
  return out;
}

PreparedDesign::PreparedDesign(DesignBlocks blocks, const Eigen::MatrixXd& penalty, const LambdaSearch& search)
    : blocks_(std::move(blocks)), search_(search) {
  const auto& dims = blocks_.dims;
  if (dims.n <= dims.total()) {
    throw DataError("insufficient sample size: need N > S + 2D + L + 1 (N = " + std::to_string(dims.n) +
                    ", S + 2D + L + 1 = " + std::to_string(dims.total()) + ")");
  }
  penalty_ = regularize_penalty(penalty);
  SpectralPieces pieces = spectral_pieces(blocks_, penalty_);
  q_ = std::move(pieces.q);
  projector_ = std::move(pieces.projector);
  eigenvalues_ = std::move(pieces.eigenvalues);
  log_det_xtx_ = pieces.log_det_xtx;
  log_det_penalty_ = pieces.log_det_penalty;
  gram_ = penalized_normal_matrix(blocks_, 0.0, penalty_);
  design_ext_.resize(dims.n, dims.total());
  design_ext_ << blocks_.x.cast<long double>(), blocks_.z.cast<long double>();
  gram_ext_ = design_ext_.transpose() * design_ext_;
}

FittedModel PreparedDesign::fit(const Eigen::VectorXd& y) const {
  const auto& dims = blocks_.dims;
  if (y.size() != dims.n) throw DataError("response length does not match design");
  const RemlProfile profile(*this, y);
  const LambdaOptimum optimum = maximize_reml(profile, search_);

  FittedModel fit;
  fit.dims = dims;
  fit.lambda = optimum.lambda;
  Eigen::MatrixXd h = gram_;
  h.bottomRightCorner(dims.l, dims.l) += fit.lambda * penalty_;
  const detail::GuardedCholesky chol(h, detail::kMaxCondition, "unidentifiable model");
  // lambda P can exceed the data part of H by many orders, so rounding H to
  // double costs digits that no double factorization recovers. Refining
  // against residuals in extended precision restores them.
  ExtendedMatrix h_ext = gram_ext_;
  h_ext.bottomRightCorner(dims.l, dims.l) += static_cast<long double>(fit.lambda) * penalty_.cast<long double>();
  const ExtendedVector rhs = design_ext_.transpose() * y.cast<long double>();
  ExtendedVector theta = chol.solve(Eigen::VectorXd(rhs.cast<double>())).cast<long double>();
  for (int step = 0; step < 3; ++step) {
    theta += chol.solve(Eigen::VectorXd((rhs - h_ext * theta).cast<double>())).cast<long double>();
  }
  fit.theta = theta.cast<double>();
  const int dof = dims.n - dims.fixed();
  fit.sigma2 = penalized_rss_at(blocks_, y, fit.lambda, penalty_, fit.theta) / dof;
  if (!(fit.sigma2 > 0.0) || !std::isfinite(fit.sigma2)) {
    throw NumericalError("non-positive residual variance estimate");
  }
  const int p = dims.total();
  const ExtendedMatrix identity = ExtendedMatrix::Identity(p, p);
  ExtendedMatrix h_inv = chol.inverse().cast<long double>();
  for (int step = 0; step < 3; ++step) {
    h_inv += chol.solve(Eigen::MatrixXd((identity - h_ext * h_inv).cast<double>())).cast<long double>();
  }
  const Eigen::MatrixXd h_inv_d = h_inv.cast<double>();
  fit.cov_theta = fit.sigma2 * (0.5 * (h_inv_d + h_inv_d.transpose()));
  fit.reml_value = -0.5 * (dof * (std::log(fit.sigma2) + 1.0) + chol.log_determinant() -
                           dims.l * std::log(fit.lambda) - log_det_penalty_);
  if (optimum.at_boundary) {
    std::ostringstream os;
    os << "REML optimum at the edge of the search interval (lambda = " << fit.lambda << ")";
    fit.warnings.push_back(os.str());
  }
  return fit;
}

FittedModel fit_reml(const DesignBlocks& blocks, const Eigen::VectorXd& y, const Eigen::MatrixXd& penalty,
                     const LambdaSearch& search) {
  if (y.size() != blocks.dims.n) throw DataError("response length does not match design");
  return PreparedDesign(blocks, penalty, search).fit(y);
}

FittedModel fit_reml(const Dataset& dataset, const SplineBasis& basis, const WeightSpec& weight_spec,
                     const LambdaSearch& search) {
  dataset.validate();
  weight_spec.validate();
  const int needed = 1 + dataset.s() + 2 * dataset.d() + basis.size();
  if (dataset.n() <= needed) {
    throw DataError("insufficient sample size: need N > S + 2D + L + 1 (N = " + std::to_string(dataset.n()) +
                    ", S + 2D + L + 1 = " + std::to_string(needed) + ")");
  }
  const DesignBlocks blocks = assemble_design(dataset, basis, weight_spec);
  FittedModel fit = fit_reml(blocks, dataset.y, penalty_matrix(basis), search);
  fit.weight_spec = weight_spec;
  return fit;
}

namespace {

std::vector<double> segment(const Eigen::VectorXd& v, int offset, int count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[i] = v[offset + i];
  return out;
}

}  // namespace

nlohmann::json to_json(const FittedModel& fit) {
  const auto& dims = fit.dims;
  nlohmann::json doc;
  doc["dims"] = {{"N", dims.n}, {"S", dims.s}, {"D", dims.d}, {"L", dims.l}};
  doc["weight"] = {{"form", std::string(to_string(fit.weight_spec.form))}, {"rho", fit.weight_spec.rho}};
  doc["lambda"] = fit.lambda;
  doc["sigma2"] = fit.sigma2;
  doc["reml_value"] = fit.reml_value;
  doc["theta"] = {
      {"intercept", fit.theta[0]},
      {"zeta", segment(fit.theta, dims.zeta_offset(), dims.s)},
      {"alpha", segment(fit.theta, dims.alpha_offset(), dims.d)},
      {"eta", segment(fit.theta, dims.eta_offset(), dims.d)},
      {"b", segment(fit.theta, dims.b_offset(), dims.l)},
  };
  std::vector<double> cov(static_cast<std::size_t>(fit.cov_theta.size()));
  for (Eigen::Index i = 0; i < fit.cov_theta.rows(); ++i) {
    for (Eigen::Index j = 0; j < fit.cov_theta.cols(); ++j) {
      cov[static_cast<std::size_t>(i * fit.cov_theta.cols() + j)] = fit.cov_theta(i, j);
    }
  }
  doc["cov_theta"] = {{"rows", fit.cov_theta.rows()}, {"cols", fit.cov_theta.cols()}, {"data", cov}};
  doc["warnings"] = fit.warnings;
  return doc;
}

FittedModel fitted_model_from_json(const nlohmann::json& doc) {
  try {
    FittedModel fit;
    const auto& dims = doc.at("dims");
    fit.dims = ModelDims{dims.at("N").get<int>(), dims.at("S").get<int>(), dims.at("D").get<int>(),
                         dims.at("L").get<int>()};
    if (doc.contains("weight")) {
      fit.weight_spec.form = parse_weight_form(doc.at("weight").at("form").get<std::string>());
      fit.weight_spec.rho = doc.at("weight").at("rho").get<double>();
    }
    fit.lambda = doc.at("lambda").get<double>();
    fit.sigma2 = doc.at("sigma2").get<double>();
    fit.reml_value = doc.at("reml_value").get<double>();
    const auto& theta = doc.at("theta");
    fit.theta.resize(fit.dims.total());
    fit.theta[0] = theta.at("intercept").get<double>();
    auto fill = [&](const char* key, int offset, int count) {
      const auto values = theta.at(key).get<std::vector<double>>();
      if (static_cast<int>(values.size()) != count) throw DataError(std::string("theta.") + key + " has wrong length");
      for (int i = 0; i < count; ++i) fit.theta[offset + i] = values[i];
    };
    fill("zeta", fit.dims.zeta_offset(), fit.dims.s);
    fill("alpha", fit.dims.alpha_offset(), fit.dims.d);
    fill("eta", fit.dims.eta_offset(), fit.dims.d);
    fill("b", fit.dims.b_offset(), fit.dims.l);
    const auto& cov = doc.at("cov_theta");
    const auto rows = cov.at("rows").get<Eigen::Index>();
    const auto cols = cov.at("cols").get<Eigen::Index>();
    const auto data = cov.at("data").get<std::vector<double>>();
    if (rows != fit.dims.total() || cols != rows || static_cast<Eigen::Index>(data.size()) != rows * cols) {
      throw DataError("cov_theta has wrong shape");
    }
    fit.cov_theta.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) fit.cov_theta(i, j) = data[static_cast<std::size_t>(i * cols + j)];
    }
    if (doc.contains("warnings")) fit.warnings = doc.at("warnings").get<std::vector<std::string>>();
    return fit;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed fitted-model JSON: ") + e.what());
  }
}

}  // namespace methsnp
