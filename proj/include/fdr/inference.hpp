#pragma once

// Uniform confidence bands by subsampling with an estimated convergence
// rate, and split conformal prediction bands.

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fdr/estimator.hpp"
#include "fdr/grid.hpp"

namespace fdr {

struct SubsamplingConfig {
  int j_reps = 100;
  // Subsample sizes b_1 < ... < b_K; defaults to 2%, 5%, 10% and 20% of n.
  std::vector<std::size_t> block_sizes;
  double alpha = 0.05;
  std::vector<std::pair<double, double>> quantile_pairs{{0.25, 0.75}, {0.10, 0.90}};
  std::uint64_t seed = 0;

  void validate(std::size_t n) const;
  std::vector<std::size_t> resolved_sizes(std::size_t n) const;
};

// Per-cell surface estimated from a subsample, on the grid of the full fit.
using CloudEstimator = std::function<std::vector<double>(const PointCloud& sample)>;

struct RateBand {
  std::vector<double> center;
  std::vector<double> lower;
  std::vector<double> upper;
  double beta_hat = 0.0;
  double z_alpha = 0.0;
  double half_width = 0.0;  // z_alpha / n^beta_hat
};

struct BandResult {
  RateBand surface;  // around u_hat
  RateBand jumps;    // around the signed largest forward difference of u_hat
  std::vector<bool> significant_jump_mask;
  std::size_t dropped = 0;       // subsample solves that failed
  std::size_t nonconverged = 0;  // subsample solves that hit max_iter
  std::vector<std::string> warnings;
};

// Mean over quantile pairs of log(G^-1(t) - G^-1(s)), with G the empirical
// distribution of `z` (linear interpolation between order statistics).
double log_quantile_spread(std::vector<double> z,
                           const std::vector<std::pair<double, double>>& pairs);

// Slope-based rate: -cov(y, log b) / var(log b).
double estimate_rate(const std::vector<double>& y, const std::vector<std::size_t>& sizes);

// The ceil((J + 1)(1 - alpha))-th smallest value (1-based, capped at J).
double critical_value(std::vector<double> z, double alpha);

// Algorithm core with an arbitrary estimator. `jump_mask` marks the cells
// whose jump significance is assessed.
BandResult subsample_bands(const PointCloud& cloud, const GridSpec& grid,
                           const std::vector<double>& u_hat, const std::vector<bool>& jump_mask,
                           const CloudEstimator& estimator, const SubsamplingConfig& cfg,
                           int workers = 1);

// Full estimator version; subsample solves start from the full-sample
// iterate.
BandResult subsample_bands(const PointCloud& cloud, const GridSpec& grid, const Fit& full,
                           const EstimatorSettings& settings, const SubsamplingConfig& cfg,
                           int workers = 1);

struct ConformalResult {
  std::vector<double> u_hat;
  std::vector<double> lower;
  std::vector<double> upper;
  double d_alpha = 0.0;
  std::vector<double> diff_hat;
  std::vector<double> diff_lower;
  std::vector<double> diff_upper;
  double d_alpha_diff = 0.0;
  std::vector<bool> jump_mask;
  std::vector<bool> significant_jump_mask;
  std::vector<std::size_t> fit_rows;          // I_1
  std::vector<std::size_t> calibration_rows;  // I_2
  bool converged = false;
};

// k-th smallest residual with k = ceil((m + 1)(1 - alpha)); +inf when k > m.
double conformal_quantile(std::vector<double> residuals, double alpha);

ConformalResult conformal_bands(const PointCloud& cloud, const GridSpec& grid,
                                const EstimatorSettings& settings, double alpha,
                                std::uint64_t seed);

}  // namespace fdr
