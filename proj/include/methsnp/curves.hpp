#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace methsnp {

struct Site {
  double position;  // base pairs
  double level;     // methylation proportion in [0,1]
};

struct MethylationSample {
  std::string individual_id;
  std::vector<Site> sites;

  // Throws DataError unless positions are strictly increasing, levels lie in
  // [0,1] and there is at least one site.
  void validate() const;
  std::vector<double> positions() const;
  std::vector<double> levels() const;
};

struct SmoothingConfig {
  int k = 70;             // nearest-CpG count for the adaptive bandwidth
  double h_min = 1000.0;  // bandwidth floor in base pairs
  int grid_size = 1001;   // M

  void validate() const;
};

struct GenomicRange {
  double t_min = 0.0;
  double t_max = 1.0;
};

// Smoothed curves for N individuals on a uniform M-point grid over [0,1].
// Row i of `values` is individual i.
struct CurveSet {
  std::vector<double> grid;
  Eigen::MatrixXd values;
  GenomicRange scaling;
  std::vector<std::string> ids;

  int size() const { return static_cast<int>(values.rows()); }
};

double scale_position(double t, GenomicRange range);
std::vector<double> scale_positions(std::span<const double> positions, GenomicRange range);

// Uniform grid on [0,1] with both endpoints, M >= 2.
std::vector<double> uniform_grid(int grid_size);

// max(d_k(t), h_min) where d_k(t) is the k-th smallest |t_j - t| over the
// sorted site positions. k is clamped to the number of sites.
double adaptive_bandwidth(std::span<const double> sorted_positions, double t,
                          const SmoothingConfig& config);

// Nadaraya-Watson weights for a fixed set of site positions evaluated on a
// grid. Row m holds the normalized Gaussian kernel weights for grid point m,
// so a curve is `weights * levels`. Bandwidths are computed in base pairs.
class SmoothingOperator {
 public:
  SmoothingOperator(std::span<const double> sorted_positions, std::span<const double> unit_grid,
                    GenomicRange range, const SmoothingConfig& config);

  Eigen::VectorXd apply(const Eigen::VectorXd& levels) const;
  const Eigen::MatrixXd& weights() const { return weights_; }
  int site_count() const { return static_cast<int>(weights_.cols()); }

 private:
  Eigen::MatrixXd weights_;
};

Eigen::VectorXd smooth_curve(const MethylationSample& sample, std::span<const double> unit_grid,
                             GenomicRange range, const SmoothingConfig& config);

// The region spanned by all sites of all samples.
GenomicRange genomic_range(std::span<const MethylationSample> samples);

// Smooths every sample on a common grid over the joint genomic range.
CurveSet build_curve_set(std::span<const MethylationSample> samples, const SmoothingConfig& config);

}  // namespace methsnp
