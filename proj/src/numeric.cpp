#include "numeric.hpp"

#include "methsnp/error.hpp"

#include <cmath>
#include <limits>
#include <utility>
#include <numbers>

namespace methsnp::detail {

namespace {

// P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0;
  double p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

}  // namespace

GaussRule gauss_legendre(int n) {
  if (n < 1) throw UsageError("Gauss-Legendre rule needs at least one node");
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

GuardedCholesky::GuardedCholesky(const Eigen::MatrixXd& matrix, double max_condition,
                                 const std::string& what) {
  const Eigen::Index n = matrix.rows();
  if (n != matrix.cols()) throw NumericalError(what + ": matrix not square");
  scale_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = matrix(i, i);
    if (!(d > 0.0) || !std::isfinite(d)) throw NumericalError(what);
    scale_[i] = 1.0 / std::sqrt(d);
  }
  const Eigen::MatrixXd scaled = scale_.asDiagonal() * matrix * scale_.asDiagonal();
  llt_.compute(scaled);
  if (llt_.info() != Eigen::Success) throw NumericalError(what);
  const double rcond = llt_.rcond();
  condition_ = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!(condition_ <= max_condition)) throw NumericalError(what);
}

Eigen::VectorXd GuardedCholesky::solve(const Eigen::VectorXd& rhs) const {
  return scale_.asDiagonal() * llt_.solve(scale_.asDiagonal() * rhs);
}

Eigen::MatrixXd GuardedCholesky::solve(const Eigen::MatrixXd& rhs) const {
  return scale_.asDiagonal() * llt_.solve(scale_.asDiagonal() * rhs);
}

Eigen::MatrixXd GuardedCholesky::inverse() const {
  const Eigen::Index n = scale_.size();
  Eigen::MatrixXd inv = solve(Eigen::MatrixXd(Eigen::MatrixXd::Identity(n, n)));
  return 0.5 * (inv + inv.transpose());
}

double GuardedCholesky::log_determinant() const {
  const auto& l = llt_.matrixLLT();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) logdet += 2.0 * std::log(l(i, i));
  // det(S A S) = det(A) * prod(s_i)^2
  for (Eigen::Index i = 0; i < scale_.size(); ++i) logdet -= 2.0 * std::log(scale_[i]);
  return logdet;
}

}  // namespace methsnp::detail
