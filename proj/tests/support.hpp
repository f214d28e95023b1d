#pragma once

#include "methsnp/basis.hpp"
#include "methsnp/model.hpp"

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace methsnp::testing {

// Small random mixed-model instance with a valid design.
struct RandomInstance {
  DesignBlocks blocks;
  Eigen::VectorXd y;
  Eigen::MatrixXd penalty;  // raw roughness matrix
};

inline RandomInstance random_instance(std::uint64_t seed, int n = 60, int s = 1, int d = 2, int l = 6) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.35);
  Eigen::MatrixXd w(n, s);
  Eigen::MatrixXd g(n, d);
  Eigen::MatrixXd omega(n, d);
  Eigen::MatrixXd z(n, l);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < s; ++c) w(i, c) = normal(rng);
    for (int k = 0; k < d; ++k) {
      g(i, k) = static_cast<double>(coin(rng)) + static_cast<double>(coin(rng));
      omega(i, k) = 0.5 + 0.2 * normal(rng);
    }
    for (int k = 0; k < l; ++k) z(i, k) = 0.1 + 0.05 * normal(rng);
  }
  // Every SNP polymorphic.
  for (int k = 0; k < d; ++k) {
    g(0, k) = 0.0;
    g(1, k) = 1.0;
  }
  RandomInstance out;
  out.blocks = assemble_design(w, g, omega, z);
  out.y.resize(n);
  for (int i = 0; i < n; ++i) out.y(i) = 1.0 + 0.5 * w(i, 0) + z.row(i).sum() * 3.0 + normal(rng);
  out.penalty = penalty_matrix(SplineBasis(l));
  return out;
}

// Textbook Cox-de Boor recursion on half-open spans, with t == 1 assigned to
// the last non-degenerate span.
inline double naive_bspline(const std::vector<double>& knots, int i, int p, double t) {
  if (p == 0) {
    const double lo = knots[i];
    const double hi = knots[i + 1];
    if (lo == hi) return 0.0;
    if (t >= lo && t < hi) return 1.0;
    if (t == knots.back() && hi == knots.back()) return 1.0;
    return 0.0;
  }
  double out = 0.0;
  const double left = knots[i + p] - knots[i];
  const double right = knots[i + p + 1] - knots[i + 1];
  if (left > 0.0) out += (t - knots[i]) / left * naive_bspline(knots, i, p - 1, t);
  if (right > 0.0) out += (knots[i + p + 1] - t) / right * naive_bspline(knots, i + 1, p - 1, t);
  return out;
}

inline double naive_derivative(const std::vector<double>& knots, int i, int p, int order, double t) {
  if (order == 0) return naive_bspline(knots, i, p, t);
  double out = 0.0;
  const double left = knots[i + p] - knots[i];
  const double right = knots[i + p + 1] - knots[i + 1];
  if (left > 0.0) out += p / left * naive_derivative(knots, i, p - 1, order - 1, t);
  if (right > 0.0) out -= p / right * naive_derivative(knots, i + 1, p - 1, order - 1, t);
  return out;
}

// Integral over [0,1] of (a + b t) psi(|t - u|) in closed form.
inline double closed_form_interaction(WeightForm form, double rho, double u, double a, double b) {
  switch (form) {
    case WeightForm::exponential: {
      auto f1 = [&](double t) { return std::exp(rho * t) * ((a + b * t) / rho - b / (rho * rho)); };
      auto f2 = [&](double t) { return -std::exp(-rho * t) * ((a + b * t) / rho + b / (rho * rho)); };
      return std::exp(-rho * u) * (f1(u) - f1(0.0)) + std::exp(rho * u) * (f2(1.0) - f2(u));
    }
    case WeightForm::gaussian: {
      const double c = a + b * u;
      auto anti = [&](double s) {
        return c * std::sqrt(std::numbers::pi) / (2.0 * rho) * std::erf(rho * s) -
               b * std::exp(-rho * rho * s * s) / (2.0 * rho * rho);
      };
      return anti(1.0 - u) - anti(-u);
    }
    case WeightForm::linear: {
      const double c = a + b * u;
      const double reach = 1.0 / rho;
      auto pos = [&](double s) { return c * s + (b - c * rho) * s * s / 2.0 - b * rho * s * s * s / 3.0; };
      auto neg = [&](double s) { return c * s + (b + c * rho) * s * s / 2.0 + b * rho * s * s * s / 3.0; };
      const double lo = std::max(-u, -reach);
      const double hi = std::min(1.0 - u, reach);
      double out = 0.0;
      if (lo < 0.0) out += neg(std::min(0.0, hi)) - neg(lo);
      if (hi > 0.0) out += pos(hi) - pos(std::max(0.0, lo));
      return out;
    }
  }
  return 0.0;
}

inline double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

using Wide = boost::multiprecision::cpp_bin_float_50;
using WideMatrix = Eigen::Matrix<Wide, Eigen::Dynamic, Eigen::Dynamic>;
using WideVector = Eigen::Matrix<Wide, Eigen::Dynamic, 1>;

struct MixedModelOracle {
  Eigen::VectorXd beta;
  Eigen::VectorXd b;
  Eigen::MatrixXd beta_cov_unscaled;  // (X' V^-1 X)^-1
  double restricted_loglik = 0.0;
};

// Marginal form of the mixed model, Y ~ N(X beta, s2 V) with
// V = I + Z (lambda P)^-1 Z': GLS for beta, BLUP for b and the profiled
// restricted log-likelihood. V is badly conditioned when P has a near
// nullspace, so everything is done in 50-digit arithmetic.
inline MixedModelOracle mixed_model_oracle(const DesignBlocks& blocks, const Eigen::VectorXd& y, double lambda,
                                           const Eigen::MatrixXd& penalty) {
  const WideMatrix x = blocks.x.cast<Wide>();
  const WideMatrix z = blocks.z.cast<Wide>();
  const WideVector yw = y.cast<Wide>();
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const WideMatrix prior = (Wide(lambda) * penalty.cast<Wide>()).fullPivLu().inverse();
  const WideMatrix v = WideMatrix::Identity(n, n) + z * prior * z.transpose();
  const Eigen::FullPivLU<WideMatrix> v_lu(v);
  const WideMatrix vx = v_lu.solve(x);
  const WideMatrix xvx = x.transpose() * vx;
  const Eigen::FullPivLU<WideMatrix> xvx_lu(xvx);
  const WideMatrix cov = xvx_lu.inverse();
  const WideVector beta = cov * (vx.transpose() * yw);
  const WideVector r = yw - x * beta;
  const WideVector vr = v_lu.solve(r);
  const WideVector b = prior * z.transpose() * vr;
  const Wide dof = Wide(static_cast<double>(n - p));
  const Wide s2 = r.dot(vr) / dof;
  using boost::multiprecision::log;
  using boost::multiprecision::abs;
  Wide log_det_v = 0;
  for (Eigen::Index i = 0; i < n; ++i) log_det_v += log(abs(v_lu.matrixLU()(i, i)));
  Wide log_det_xvx = 0;
  for (Eigen::Index i = 0; i < p; ++i) log_det_xvx += log(abs(xvx_lu.matrixLU()(i, i)));
  MixedModelOracle out;
  out.beta = beta.cast<double>();
  out.b = b.cast<double>();
  out.beta_cov_unscaled = cov.cast<double>();
  out.restricted_loglik = static_cast<double>(Wide(-0.5) * (dof * (log(s2) + 1) + log_det_v + log_det_xvx));
  return out;
}

}  // namespace methsnp::testing
