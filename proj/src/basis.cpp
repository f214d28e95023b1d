#include "methsnp/basis.hpp"

#include "methsnp/error.hpp"
#include "numeric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace methsnp {

SplineBasis::SplineBasis(int size, int degree) : size_(size), degree_(degree) {
  if (degree < 0) throw UsageError("spline degree must be >= 0");
  if (size < degree + 1) {
    throw UsageError("spline basis needs at least degree + 1 = " + std::to_string(degree + 1) +
                     " functions, got " + std::to_string(size));
  }
  const int interior = size - degree - 1;
  knots_.reserve(static_cast<std::size_t>(size + degree + 1));
  for (int i = 0; i <= degree; ++i) knots_.push_back(0.0);
  for (int j = 1; j <= interior; ++j) knots_.push_back(static_cast<double>(j) / (interior + 1));
  for (int i = 0; i <= degree; ++i) knots_.push_back(1.0);
}

std::vector<double> SplineBasis::breakpoints() const {
  std::vector<double> out(knots_);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int SplineBasis::span_index(double t) const {
  const int n = size_ - 1;
  if (t >= knots_[n + 1]) return n;
  if (t <= knots_[degree_]) return degree_;
  int low = degree_;
  int high = n + 1;
  int mid = (low + high) / 2;
  while (t < knots_[mid] || t >= knots_[mid + 1]) {
    if (t < knots_[mid]) {
      high = mid;
    } else {
      low = mid;
    }
    mid = (low + high) / 2;
  }
  return mid;
}

Eigen::VectorXd SplineBasis::derivative(double t, int order) const {
  if (order < 0) throw UsageError("derivative order must be >= 0");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(size_);
  if (order > degree_) return out;
  if (t < 0.0 || t > 1.0) throw DataError("spline evaluation outside [0,1]");

  // Nonzero basis functions and their derivatives on the knot span holding t
  // (triangular table of the standard derivative algorithm).
  const int p = degree_;
  const int span = span_index(t);
  std::vector<std::vector<double>> ndu(p + 1, std::vector<double>(p + 1, 0.0));
  std::vector<double> left(p + 1, 0.0);
  std::vector<double> right(p + 1, 0.0);
  ndu[0][0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = t - knots_[span + 1 - j];
    right[j] = knots_[span + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double temp = ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }

  if (order == 0) {
    for (int j = 0; j <= p; ++j) out[span - p + j] = ndu[j][p];
    return out;
  }

  std::vector<std::vector<double>> a(2, std::vector<double>(p + 1, 0.0));
  for (int r = 0; r <= p; ++r) {
    int s1 = 0;
    int s2 = 1;
    a[0][0] = 1.0;
    double d = 0.0;
    for (int k = 1; k <= order; ++k) {
      d = 0.0;
      const int rk = r - k;
      const int pk = p - k;
      if (r >= k) {
        a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
        d = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
        d += a[s2][k] * ndu[r][pk];
      }
      std::swap(s1, s2);
    }
    out[span - p + r] = d;
  }
  double factor = p;
  for (int k = 1; k < order; ++k) factor *= (p - k);
  return out * factor;
}

Eigen::VectorXd SplineBasis::evaluate(double t) const { return derivative(t, 0); }

Eigen::VectorXd SplineBasis::integrals() const {
  Eigen::VectorXd out(size_);
  for (int i = 0; i < size_; ++i) {
    out[i] = (knots_[i + degree_ + 1] - knots_[i]) / (degree_ + 1);
  }
  return out;
}

Eigen::VectorXd SplineBasis::affine_coefficients(double a, double c) const {
  Eigen::VectorXd out(size_);
  for (int i = 0; i < size_; ++i) {
    double greville = 0.0;
    for (int j = 1; j <= degree_; ++j) greville += knots_[i + j];
    greville = degree_ > 0 ? greville / degree_ : knots_[i];
    out[i] = a + c * greville;
  }
  return out;
}

Eigen::MatrixXd penalty_matrix(const SplineBasis& basis) {
  if (basis.degree() < 2) throw UsageError("penalty matrix requires spline degree >= 2");
  const int size = basis.size();
  // Second derivatives are polynomials of degree p-2 on each span; their
  // products are integrated exactly by p-1 Gauss points.
  const auto rule = detail::gauss_legendre(std::max(1, basis.degree() - 1));
  const auto breaks = basis.breakpoints();
  Eigen::MatrixXd penalty = Eigen::MatrixXd::Zero(size, size);
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    const double a = breaks[s];
    const double b = breaks[s + 1];
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const Eigen::VectorXd d2 = basis.derivative(mid + half * rule.nodes[q], 2);
      penalty.noalias() += (half * rule.weights[q]) * d2 * d2.transpose();
    }
  }
  return 0.5 * (penalty + penalty.transpose());
}

std::string_view to_string(WeightForm form) {
  switch (form) {
    case WeightForm::exponential:
      return "exponential";
    case WeightForm::gaussian:
      return "gaussian";
    case WeightForm::linear:
      return "linear";
  }
  return "unknown";
}

WeightForm parse_weight_form(std::string_view name) {
  if (name == "exponential" || name == "convex") return WeightForm::exponential;
  if (name == "gaussian" || name == "concave") return WeightForm::gaussian;
  if (name == "linear") return WeightForm::linear;
  throw UsageError("unknown weight form '" + std::string(name) +
                   "' (expected exponential, gaussian or linear)");
}

void WeightSpec::validate() const {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw UsageError("weight rho must be a positive number");
}

std::string WeightSpec::label() const {
  std::ostringstream os;
  os << to_string(form) << ":" << rho;
  return os.str();
}

double weight_eval(const WeightSpec& spec, double u) {
  if (u < 0.0) throw DataError("weight function evaluated at negative distance");
  switch (spec.form) {
    case WeightForm::exponential:
      return std::exp(-spec.rho * u);
    case WeightForm::gaussian:
      return std::exp(-spec.rho * spec.rho * u * u);
    case WeightForm::linear:
      return std::max(1.0 - spec.rho * u, 0.0);
  }
  return 0.0;
}

namespace {

constexpr int kPiecePoints = 4;

// Accumulates, for every grid interval, the integrals of f(t) against the two
// hat functions supported there. f maps t to a vector of K values.
template <typename VectorFn>
Eigen::MatrixXd hat_integrals(std::span<const double> grid, int columns, VectorFn&& f,
                              std::vector<double> breakpoints) {
  if (grid.size() < 2) throw DataError("quadrature grid needs at least two points");
  std::sort(breakpoints.begin(), breakpoints.end());
  const auto rule = detail::gauss_legendre(kPiecePoints);
  const auto rows = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, columns);
  std::size_t next_break = 0;
  std::vector<double> cuts;
  for (Eigen::Index m = 0; m + 1 < rows; ++m) {
    const double lo = grid[m];
    const double hi = grid[m + 1];
    const double width = hi - lo;
    if (!(width > 0.0)) throw DataError("quadrature grid must be strictly increasing");
    cuts.assign({lo});
    while (next_break < breakpoints.size() && breakpoints[next_break] <= lo) ++next_break;
    for (std::size_t b = next_break; b < breakpoints.size() && breakpoints[b] < hi; ++b) {
      if (breakpoints[b] > cuts.back()) cuts.push_back(breakpoints[b]);
    }
    cuts.push_back(hi);
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double half = 0.5 * (cuts[c + 1] - cuts[c]);
      const double mid = 0.5 * (cuts[c + 1] + cuts[c]);
      for (int q = 0; q < kPiecePoints; ++q) {
        const double t = mid + half * rule.nodes[q];
        const double w = half * rule.weights[q];
        const double right_share = (t - lo) / width;
        const auto values = f(t);
        out.row(m) += (w * (1.0 - right_share)) * values.transpose();
        out.row(m + 1) += (w * right_share) * values.transpose();
      }
    }
  }
  return out;
}

}  // namespace

Eigen::VectorXd quadrature_weights(std::span<const double> grid, const std::function<double(double)>& f,
                                   std::span<const double> breakpoints) {
  auto as_vector = [&f](double t) {
    Eigen::Matrix<double, 1, 1> v;
    v(0) = f(t);
    return v;
  };
  return hat_integrals(grid, 1, as_vector, std::vector<double>(breakpoints.begin(), breakpoints.end()))
      .col(0);
}

Eigen::VectorXd trapezoid_weights(std::span<const double> grid) {
  const auto rows = static_cast<Eigen::Index>(grid.size());
  if (rows < 2) throw DataError("quadrature grid needs at least two points");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(rows);
  for (Eigen::Index m = 0; m + 1 < rows; ++m) {
    const double half = 0.5 * (grid[m + 1] - grid[m]);
    w[m] += half;
    w[m + 1] += half;
  }
  return w;
}

Eigen::MatrixXd basis_quadrature(const SplineBasis& basis, std::span<const double> grid) {
  return hat_integrals(
      grid, basis.size(), [&basis](double t) { return basis.evaluate(t); }, basis.breakpoints());
}

Eigen::MatrixXd interaction_quadrature(const WeightSpec& spec, std::span<const double> snp_positions,
                                       std::span<const double> grid) {
  spec.validate();
  std::vector<double> breaks;
  for (double u : snp_positions) {
    if (!(u >= 0.0 && u <= 1.0)) throw DataError("SNP outside scaled region");
    breaks.push_back(u);
    if (spec.form == WeightForm::linear) {
      breaks.push_back(u - 1.0 / spec.rho);
      breaks.push_back(u + 1.0 / spec.rho);
    }
  }
  const auto columns = static_cast<Eigen::Index>(snp_positions.size());
  auto psi = [&](double t) {
    Eigen::VectorXd v(columns);
    for (Eigen::Index d = 0; d < columns; ++d) v[d] = weight_eval(spec, std::abs(t - snp_positions[d]));
    return v;
  };
  return hat_integrals(grid, static_cast<int>(columns), psi, std::move(breaks));
}

Eigen::VectorXd functional_covariates(const Eigen::VectorXd& curve, const SplineBasis& basis,
                                      std::span<const double> grid) {
  if (curve.size() != static_cast<Eigen::Index>(grid.size())) {
    throw DataError("curve length does not match grid length");
  }
  return basis_quadrature(basis, grid).transpose() * curve;
}

Eigen::VectorXd interaction_covariates(const Eigen::VectorXd& curve, const WeightSpec& spec,
                                       std::span<const double> snp_positions,
                                       std::span<const double> grid) {
  if (curve.size() != static_cast<Eigen::Index>(grid.size())) {
    throw DataError("curve length does not match grid length");
  }
  return interaction_quadrature(spec, snp_positions, grid).transpose() * curve;
}

}  // namespace methsnp
