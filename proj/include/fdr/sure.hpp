#pragma once

// Hyperparameter selection by Monte-Carlo averaged SURE on the binned
// responses.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "fdr/estimator.hpp"
#include "fdr/grid.hpp"

namespace fdr {

// Raw: sigma is the noise sd of single observations and applies to every
// cell. PerCell: a cell mean over c observations has variance sigma^2 / c.
enum class SigmaMode { Raw, PerCell };

struct SureConfig {
  std::optional<double> sigma;  // estimated from within-cell spread when unset
  SigmaMode sigma_mode = SigmaMode::Raw;
  double delta = 0.01;
  int r_draws = 3;
  Range lambda_range{1.0, 500.0};
  Range nu_range{5e-4, 0.1};
  std::size_t n_lambda = 20;
  std::size_t n_nu = 20;
  bool log_uniform = false;
  std::uint64_t seed = 0;

  void validate() const;
};

// Maps per-cell responses to per-cell fitted values.
using CellEstimator = std::function<std::vector<double>(const std::vector<double>& y)>;

// eta = (1/M) sum_c [(y_c - u_c)^2 - s_c + 2 s_c b_c (u(y + delta b)_c - u_c) / delta]
// averaged over r_draws probes b, with s_c = sigma_sq[c] and M the number of
// observed cells. Each probe is a standard normal vector on the observed
// cells rescaled to squared norm M. Unobserved cells carry no residual or
// probe; `refill` (optional) restores them after perturbation.
double sure_value(const std::vector<double>& y, const std::vector<double>& sigma_sq,
                  const std::vector<bool>& observed, double delta, int r_draws,
                  std::uint64_t seed, const CellEstimator& estimator,
                  const std::function<void(std::vector<double>&)>& refill = {});

// Pooled within-cell standard deviation of the raw responses.
double estimate_sigma(const PointCloud& cloud, const GridSpec& grid);

struct SureRow {
  double lambda = 0.0;
  double nu = 0.0;
  double eta = 0.0;  // +inf when the candidate failed or did not converge
  bool converged = false;
};

struct SureResult {
  double lambda = 0.0;
  double nu = 0.0;
  double eta = 0.0;
  double sigma = 0.0;
  std::vector<SureRow> table;
};

// SURE of the full estimator at one (lambda, nu); the remaining solver
// settings come from `settings`. +inf when a solve fails or hits max_iter.
double sure_value(const PointCloud& cloud, const GridSpec& grid, double lambda, double nu,
                  const EstimatorSettings& settings, const SureConfig& cfg);

// Candidate values per axis: n draws from the range (uniform or
// log-uniform), sorted ascending. A degenerate range yields its endpoint.
std::vector<double> sample_axis(const Range& range, std::size_t n, bool log_uniform,
                                std::uint64_t seed, std::uint64_t stream);

// Evaluates every (lambda, nu) pair of the sampled axes, lambda-major.
SureResult sure_search(const PointCloud& cloud, const GridSpec& grid,
                       const EstimatorSettings& settings, const SureConfig& cfg,
                       int workers = 1);

}  // namespace fdr
