#pragma once

// Internal numerical helpers shared by the library translation units.

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace methsnp::detail {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule by Newton iteration on P_n.
GaussRule gauss_legendre(int n);

// Symmetric positive-definite factorization with Jacobi equilibration and a
// condition guard. The matrix is scaled to unit diagonal before factoring so
// the reciprocal-condition estimate does not depend on column units.
class GuardedCholesky {
 public:
  // Throws NumericalError(`what`) if the matrix is not positive definite or
  // its equilibrated condition estimate exceeds `max_condition`.
  GuardedCholesky(const Eigen::MatrixXd& matrix, double max_condition, const std::string& what);

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
  Eigen::MatrixXd inverse() const;
  double log_determinant() const;
  double condition_estimate() const { return condition_; }

 private:
  Eigen::VectorXd scale_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double condition_ = 0.0;
};

inline constexpr double kMaxCondition = 1e12;

}  // namespace methsnp::detail
