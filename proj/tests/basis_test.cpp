#include "methsnp/basis.hpp"
#include "methsnp/curves.hpp"
#include "methsnp/error.hpp"
#include "support.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace methsnp {
namespace {

using testing::closed_form_interaction;
using testing::naive_derivative;

TEST(SplineBasis, KnotsAreClampedAndEquallySpaced) {
  const SplineBasis basis(10);
  const auto& k = basis.knots();
  ASSERT_EQ(k.size(), 14u);
  for (int j = 0; j < 4; ++j) {
    EXPECT_EQ(k[j], 0.0);
    EXPECT_EQ(k[k.size() - 1 - j], 1.0);
  }
  for (int j = 0; j <= 6; ++j) EXPECT_NEAR(k[3 + j], j / 7.0, 1e-15);
}

TEST(SplineBasis, MatchesCoxDeBoorRecursion) {
  for (int size : {4, 7, 10, 15}) {
    const SplineBasis basis(size);
    for (double t : {0.0, 0.013, 0.25, 0.3333, 0.5, 0.71, 0.999, 1.0}) {
      const Eigen::VectorXd v = basis.evaluate(t);
      for (int l = 0; l < size; ++l) {
        EXPECT_NEAR(v(l), testing::naive_bspline(basis.knots(), l, 3, t), 1e-13) << size << " " << t << " " << l;
      }
    }
  }
}

TEST(SplineBasis, DerivativesMatchRecursion) {
  const SplineBasis basis(9);
  for (double t : {0.05, 0.31, 0.62, 0.93}) {
    for (int order = 1; order <= 2; ++order) {
      const Eigen::VectorXd v = basis.derivative(t, order);
      for (int l = 0; l < 9; ++l) {
        EXPECT_NEAR(v(l), naive_derivative(basis.knots(), l, 3, order, t), 1e-9) << t << " " << order;
      }
    }
  }
}

TEST(SplineBasis, PartitionOfUnityAndNonNegative) {
  const SplineBasis basis(12);
  for (int j = 0; j <= 200; ++j) {
    const Eigen::VectorXd v = basis.evaluate(j / 200.0);
    EXPECT_NEAR(v.sum(), 1.0, 1e-13);
    EXPECT_GE(v.minCoeff(), -1e-15);
  }
}

TEST(SplineBasis, IntegralsHaveClosedForm) {
  const SplineBasis basis(10);
  const auto& k = basis.knots();
  const Eigen::VectorXd in = basis.integrals();
  for (int l = 0; l < 10; ++l) EXPECT_NEAR(in(l), (k[l + 4] - k[l]) / 4.0, 1e-14);
}

TEST(SplineBasis, AffineCoefficientsReproduceLines) {
  const SplineBasis basis(8);
  const Eigen::VectorXd c = basis.affine_coefficients(0.7, -1.3);
  for (double t : {0.0, 0.2, 0.55, 1.0}) EXPECT_NEAR(basis.evaluate(t).dot(c), 0.7 - 1.3 * t, 1e-13);
}

TEST(SplineBasis, TooFewFunctionsIsUsageError) { EXPECT_THROW(SplineBasis(3), UsageError); }

TEST(PenaltyMatrix, MatchesAdaptiveQuadratureOfRecursion) {
  for (int size : {5, 10, 14}) {
    const SplineBasis basis(size);
    const Eigen::MatrixXd p = penalty_matrix(basis);
    const auto breaks = basis.breakpoints();
    for (int a = 0; a < size; ++a) {
      for (int b = 0; b < size; ++b) {
        double oracle = 0.0;
        for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
          auto f = [&](double t) {
            return naive_derivative(basis.knots(), a, 3, 2, t) * naive_derivative(basis.knots(), b, 3, 2, t);
          };
          oracle += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, breaks[s], breaks[s + 1], 0, 1e-14);
        }
        EXPECT_NEAR(p(a, b), oracle, 1e-6 * std::max(1.0, std::abs(oracle))) << size << " " << a << " " << b;
      }
    }
  }
}

TEST(PenaltyMatrix, SymmetricPsdWithAffineNullspace) {
  const SplineBasis basis(10);
  const Eigen::MatrixXd p = penalty_matrix(basis);
  EXPECT_LT((p - p.transpose()).norm(), 1e-12 * p.norm());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p);
  EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-9 * p.norm());
  EXPECT_LT((p * basis.affine_coefficients(1.0, 0.0)).norm(), 1e-9 * p.norm());
  EXPECT_LT((p * basis.affine_coefficients(0.0, 1.0)).norm(), 1e-9 * p.norm());
  EXPECT_EQ((eig.eigenvalues().array() > 1e-8 * p.norm()).count(), 8);
}

TEST(Quadrature, TrapezoidWeights) {
  const auto grid = uniform_grid(11);
  const Eigen::VectorXd w = trapezoid_weights(grid);
  EXPECT_NEAR(w.sum(), 1.0, 1e-15);
  EXPECT_NEAR(w(0), 0.05, 1e-15);
  EXPECT_NEAR(w(5), 0.1, 1e-15);
  Eigen::VectorXd line(11);
  for (int m = 0; m < 11; ++m) line(m) = 2.0 + 3.0 * grid[m];
  EXPECT_NEAR(w.dot(line), 3.5, 1e-14);
}

TEST(Quadrature, InteractionIntegralsMatchClosedForms) {
  const auto grid = uniform_grid(1001);
  const double a = 0.4;
  const double b = 0.35;
  Eigen::VectorXd curve(1001);
  for (int m = 0; m < 1001; ++m) curve(m) = a + b * grid[m];
  const std::vector<double> snps = {0.0, 0.3, 0.4999, 0.77, 1.0};
  for (WeightForm form : {WeightForm::exponential, WeightForm::gaussian, WeightForm::linear}) {
    for (double rho : {0.1, 1.0, 8.0, 10.0}) {
      const WeightSpec spec{form, rho};
      const Eigen::VectorXd omega = interaction_covariates(curve, spec, snps, grid);
      for (std::size_t d = 0; d < snps.size(); ++d) {
        EXPECT_NEAR(omega(static_cast<Eigen::Index>(d)), closed_form_interaction(form, rho, snps[d], a, b), 1e-6)
            << to_string(form) << " rho=" << rho << " u=" << snps[d];
      }
    }
  }
}

TEST(Quadrature, InteractionDesignRejectsPositionsOutsideUnitInterval) {
  const auto grid = uniform_grid(101);
  const std::vector<double> snps = {1.2};
  EXPECT_THROW(interaction_quadrature(WeightSpec{}, snps, grid), DataError);
}

TEST(Quadrature, FunctionalCovariatesOfConstantCurve) {
  const SplineBasis basis(10);
  const auto grid = uniform_grid(1001);
  const Eigen::VectorXd curve = Eigen::VectorXd::Constant(1001, 0.6);
  const Eigen::VectorXd z = functional_covariates(curve, basis, grid);
  EXPECT_LT((z - 0.6 * basis.integrals()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(WeightFunction, Forms) {
  EXPECT_NEAR(weight_eval({WeightForm::exponential, 2.0}, 0.5), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(weight_eval({WeightForm::gaussian, 2.0}, 0.5), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(weight_eval({WeightForm::linear, 2.0}, 0.25), 0.5, 1e-15);
  EXPECT_EQ(weight_eval({WeightForm::linear, 2.0}, 0.75), 0.0);
  EXPECT_THROW((WeightSpec{WeightForm::exponential, 0.0}.validate()), Error);
}

}  // namespace
}  // namespace methsnp
