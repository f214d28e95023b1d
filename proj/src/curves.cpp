#include "methsnp/curves.hpp"

#include "methsnp/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace methsnp {

void MethylationSample::validate() const {
  if (sites.empty()) {
    throw DataError("individual '" + individual_id + "' has no methylation sites");
  }
  for (std::size_t j = 0; j < sites.size(); ++j) {
    const double p = sites[j].level;
    if (!(p >= 0.0 && p <= 1.0)) {
      throw DataError("individual '" + individual_id + "': level " + std::to_string(p) +
                      " outside [0,1] at site " + std::to_string(j));
    }
    if (j > 0 && !(sites[j].position > sites[j - 1].position)) {
      throw DataError("individual '" + individual_id +
                      "': positions not strictly increasing at site " + std::to_string(j));
    }
  }
}

std::vector<double> MethylationSample::positions() const {
  std::vector<double> out(sites.size());
  std::transform(sites.begin(), sites.end(), out.begin(), [](const Site& s) { return s.position; });
  return out;
}

std::vector<double> MethylationSample::levels() const {
  std::vector<double> out(sites.size());
  std::transform(sites.begin(), sites.end(), out.begin(), [](const Site& s) { return s.level; });
  return out;
}

void SmoothingConfig::validate() const {
  if (k < 1) throw UsageError("smoothing: k must be >= 1");
  if (!(h_min > 0.0)) throw UsageError("smoothing: h_min must be > 0");
  if (grid_size < 2) throw UsageError("smoothing: grid_size must be >= 2");
}

double scale_position(double t, GenomicRange range) {
  if (!(range.t_max > range.t_min)) throw DataError("degenerate genomic region");
  return (t - range.t_min) / (range.t_max - range.t_min);
}

std::vector<double> scale_positions(std::span<const double> positions, GenomicRange range) {
  std::vector<double> out;
  out.reserve(positions.size());
  for (double t : positions) out.push_back(scale_position(t, range));
  return out;
}

std::vector<double> uniform_grid(int grid_size) {
  if (grid_size < 2) throw UsageError("grid size must be >= 2");
  std::vector<double> grid(static_cast<std::size_t>(grid_size));
  const double step = 1.0 / (grid_size - 1);
  for (int m = 0; m < grid_size; ++m) grid[m] = m * step;
  grid.back() = 1.0;
  return grid;
}

double adaptive_bandwidth(std::span<const double> sorted_positions, double t,
                          const SmoothingConfig& config) {
  if (sorted_positions.empty()) throw DataError("adaptive bandwidth: empty site list");
  const std::size_t k =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(config.k, 1)), sorted_positions.size());

  // Merge outward from the insertion point; the k-th step yields d_k(t).
  auto right = static_cast<std::ptrdiff_t>(
      std::lower_bound(sorted_positions.begin(), sorted_positions.end(), t) - sorted_positions.begin());
  auto left = right - 1;
  const auto n = static_cast<std::ptrdiff_t>(sorted_positions.size());
  double dk = 0.0;
  for (std::size_t step = 0; step < k; ++step) {
    const double dl = left >= 0 ? t - sorted_positions[left] : std::numeric_limits<double>::infinity();
    const double dr = right < n ? sorted_positions[right] - t : std::numeric_limits<double>::infinity();
    if (dl <= dr) {
      dk = dl;
      --left;
    } else {
      dk = dr;
      ++right;
    }
  }
  return std::max(dk, config.h_min);
}

SmoothingOperator::SmoothingOperator(std::span<const double> sorted_positions,
                                     std::span<const double> unit_grid, GenomicRange range,
                                     const SmoothingConfig& config) {
  config.validate();
  if (sorted_positions.empty()) throw DataError("smoothing: empty site list");
  const auto m = static_cast<Eigen::Index>(sorted_positions.size());
  const auto grid_points = static_cast<Eigen::Index>(unit_grid.size());
  weights_.resize(grid_points, m);
  const double width = range.t_max - range.t_min;

  for (Eigen::Index g = 0; g < grid_points; ++g) {
    const double t = range.t_min + unit_grid[g] * width;
    const double h = adaptive_bandwidth(sorted_positions, t, config);
    double total = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double u = (sorted_positions[j] - t) / h;
      // The normal density's constant cancels in the ratio.
      const double w = std::exp(-0.5 * u * u);
      weights_(g, j) = w;
      total += w;
    }
    // With h >= d_k(t) the nearest site has |u| <= 1, so this cannot underflow.
    if (!(total > 0.0) || !std::isfinite(total)) {
      throw NumericalError("isolated grid point at position " + std::to_string(t));
    }
    weights_.row(g) /= total;
  }
}

Eigen::VectorXd SmoothingOperator::apply(const Eigen::VectorXd& levels) const {
  if (levels.size() != weights_.cols()) {
    throw DataError("smoothing: level vector length does not match site count");
  }
  return weights_ * levels;
}

Eigen::VectorXd smooth_curve(const MethylationSample& sample, std::span<const double> unit_grid,
                             GenomicRange range, const SmoothingConfig& config) {
  sample.validate();
  const auto positions = sample.positions();
  const auto levels = sample.levels();
  SmoothingOperator op(positions, unit_grid, range, config);
  return op.apply(Eigen::Map<const Eigen::VectorXd>(levels.data(), static_cast<Eigen::Index>(levels.size())));
}

GenomicRange genomic_range(std::span<const MethylationSample> samples) {
  GenomicRange range{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& s : samples) {
    if (s.sites.empty()) continue;
    range.t_min = std::min(range.t_min, s.sites.front().position);
    range.t_max = std::max(range.t_max, s.sites.back().position);
  }
  if (!(range.t_max > range.t_min)) throw DataError("degenerate genomic region");
  return range;
}

CurveSet build_curve_set(std::span<const MethylationSample> samples, const SmoothingConfig& config) {
  config.validate();
  if (samples.empty()) throw DataError("no methylation samples");
  for (const auto& s : samples) s.validate();

  CurveSet out;
  out.scaling = genomic_range(samples);
  out.grid = uniform_grid(config.grid_size);
  out.values.resize(static_cast<Eigen::Index>(samples.size()), config.grid_size);
  out.ids.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.values.row(static_cast<Eigen::Index>(i)) =
        smooth_curve(samples[i], out.grid, out.scaling, config).transpose();
    out.ids.push_back(samples[i].individual_id);
  }
  return out;
}

}  // namespace methsnp
