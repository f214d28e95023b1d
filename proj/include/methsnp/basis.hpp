#pragma once

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace methsnp {

// Clamped B-spline basis on [0,1] with equally spaced interior knots.
class SplineBasis {
 public:
  SplineBasis(int size, int degree = 3);

  int size() const { return size_; }
  int degree() const { return degree_; }
  const std::vector<double>& knots() const { return knots_; }
  // Distinct knot values 0 = k_0 < ... < k_r = 1.
  std::vector<double> breakpoints() const;

  // All `size()` basis values at t in [0,1].
  Eigen::VectorXd evaluate(double t) const;
  // All basis derivatives of the given order at t; order 0 is evaluate().
  Eigen::VectorXd derivative(double t, int order) const;
  // Exact integral of each basis function over [0,1].
  Eigen::VectorXd integrals() const;
  // Coefficients reproducing an affine function a + c*t (Greville abscissae).
  Eigen::VectorXd affine_coefficients(double a, double c) const;

 private:
  int span_index(double t) const;

  int size_;
  int degree_;
  std::vector<double> knots_;
};

inline SplineBasis build_basis(int size, int degree = 3) { return SplineBasis(size, degree); }

// L x L matrix of integrals of B_l'' B_l''' over [0,1], computed exactly per
// knot span by Gauss-Legendre quadrature. Symmetric PSD; the affine functions
// span its nullspace.
Eigen::MatrixXd penalty_matrix(const SplineBasis& basis);

enum class WeightForm { exponential, gaussian, linear };

std::string_view to_string(WeightForm form);
WeightForm parse_weight_form(std::string_view name);

struct WeightSpec {
  WeightForm form = WeightForm::exponential;
  double rho = 1.0;

  void validate() const;
  std::string label() const;
  bool operator==(const WeightSpec&) const = default;
};

// psi_rho(u) for u >= 0: exp(-rho u), exp(-rho^2 u^2) or max(1 - rho u, 0).
double weight_eval(const WeightSpec& spec, double u);

// Linear quadrature functionals on a uniform grid over [0,1].
//
// A curve known on the grid is treated as its piecewise-linear interpolant and
// integrated exactly against a weight function f, i.e. the functional is
// sum_m Pi(t_m) * integral f(t) hat_m(t) dt. For f == const this is the
// trapezoid rule. Breakpoints where f is not smooth must be supplied so each
// piece is integrated by Gauss-Legendre without crossing a kink.
Eigen::VectorXd quadrature_weights(std::span<const double> grid, const std::function<double(double)>& f,
                                   std::span<const double> breakpoints = {});

// Plain trapezoid weights on the grid.
Eigen::VectorXd trapezoid_weights(std::span<const double> grid);

// M x L matrix whose column l holds the quadrature weights of B_l.
Eigen::MatrixXd basis_quadrature(const SplineBasis& basis, std::span<const double> grid);

// M x D matrix whose column d holds the quadrature weights of psi(|t - u_d|).
// Throws DataError("SNP outside scaled region") when some u_d is outside [0,1].
Eigen::MatrixXd interaction_quadrature(const WeightSpec& spec, std::span<const double> snp_positions,
                                       std::span<const double> grid);

// Z_i: integrals of B_l(t) Pi_i(t) over [0,1].
Eigen::VectorXd functional_covariates(const Eigen::VectorXd& curve, const SplineBasis& basis,
                                      std::span<const double> grid);

// Omega_i: integrals of psi(|t - u_d|) Pi_i(t) over [0,1].
Eigen::VectorXd interaction_covariates(const Eigen::VectorXd& curve, const WeightSpec& spec,
                                       std::span<const double> snp_positions,
                                       std::span<const double> grid);

}  // namespace methsnp
