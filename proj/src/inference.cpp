#include "fdr/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "fdr/error.hpp"
#include "fdr/parallel.hpp"
#include "fdr/random.hpp"
#include "fdr/segmentation.hpp"

namespace fdr {

void SubsamplingConfig::validate(std::size_t n) const {
  if (j_reps < 2) throw Error(ErrorCode::InvalidConfig, "need at least 2 subsample reps");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidConfig, "alpha must be in (0,1)");
  if (quantile_pairs.empty()) throw Error(ErrorCode::InvalidConfig, "no quantile pairs");
  for (const auto& [s, t] : quantile_pairs) {
    if (!(s > 0.0 && s < t && t < 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "quantile pairs need 0 < s < t < 1");
    }
  }
  const auto sizes = resolved_sizes(n);
  if (sizes.size() < 2) throw Error(ErrorCode::InvalidConfig, "need at least 2 subsample sizes");
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] < 1 || sizes[k] >= n) {
      throw Error(ErrorCode::InvalidConfig, "subsample sizes must lie in [1, n)");
    }
    if (k > 0 && sizes[k] <= sizes[k - 1]) {
      throw Error(ErrorCode::InvalidConfig, "subsample sizes must be increasing");
    }
  }
}

std::vector<std::size_t> SubsamplingConfig::resolved_sizes(std::size_t n) const {
  if (!block_sizes.empty()) return block_sizes;
  std::vector<std::size_t> out;
  for (double frac : {0.02, 0.05, 0.10, 0.20}) {
    const auto b = static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
    if (b >= 1 && (out.empty() || b > out.back())) out.push_back(b);
  }
  return out;
}

namespace {

double quantile_linear(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<std::size_t> draw_rows(std::size_t n, std::size_t b, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < b; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(b);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double sup_deviation(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Rate, critical value and band from the deviation table z[j][k]
// (NaN marks a dropped solve).
RateBand rate_band(const std::vector<double>& center, const std::vector<std::vector<double>>& z,
                   const std::vector<std::size_t>& sizes, std::size_t n,
                   const SubsamplingConfig& cfg) {
  const std::size_t kk = sizes.size();
  std::vector<double> y(kk);
  std::vector<std::vector<double>> columns(kk);
  for (std::size_t k = 0; k < kk; ++k) {
    for (const auto& row : z) {
      if (!std::isnan(row[k])) columns[k].push_back(row[k]);
    }
    y[k] = log_quantile_spread(columns[k], cfg.quantile_pairs);
  }
  RateBand band;
  band.center = center;
  band.beta_hat = estimate_rate(y, sizes);
  const double scale = std::pow(static_cast<double>(sizes.back()), band.beta_hat);
  std::vector<double> rescaled = columns.back();
  for (double& v : rescaled) v *= scale;
  band.z_alpha = critical_value(std::move(rescaled), cfg.alpha);
  band.half_width = band.z_alpha / std::pow(static_cast<double>(n), band.beta_hat);
  band.lower.resize(center.size());
  band.upper.resize(center.size());
  for (std::size_t c = 0; c < center.size(); ++c) {
    band.lower[c] = center[c] - band.half_width;
    band.upper[c] = center[c] + band.half_width;
  }
  return band;
}

}  // namespace

double log_quantile_spread(std::vector<double> z,
                           const std::vector<std::pair<double, double>>& pairs) {
  if (z.size() < 2) throw Error(ErrorCode::TooFewReps, "too few subsample statistics");
  std::sort(z.begin(), z.end());
  double total = 0.0;
  for (const auto& [s, t] : pairs) {
    const double spread = quantile_linear(z, t) - quantile_linear(z, s);
    if (!(spread > 0.0)) {
      throw Error(ErrorCode::TooFewReps, "subsample statistics have no spread");
    }
    total += std::log(spread);
  }
  return total / static_cast<double>(pairs.size());
}

double estimate_rate(const std::vector<double>& y, const std::vector<std::size_t>& sizes) {
  if (y.size() != sizes.size() || y.size() < 2) {
    throw Error(ErrorCode::InvalidConfig, "rate regression needs at least 2 sizes");
  }
  const double k = static_cast<double>(y.size());
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    mean_x += std::log(static_cast<double>(sizes[i]));
    mean_y += y[i];
  }
  mean_x /= k;
  mean_y /= k;
  double cov = 0.0;
  double var = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double dx = std::log(static_cast<double>(sizes[i])) - mean_x;
    cov += dx * (y[i] - mean_y);
    var += dx * dx;
  }
  return -cov / var;
}

double critical_value(std::vector<double> z, double alpha) {
  if (z.empty()) throw Error(ErrorCode::TooFewReps, "no subsample statistics");
  std::sort(z.begin(), z.end());
  const double j = static_cast<double>(z.size());
  auto k = static_cast<std::size_t>(std::ceil((j + 1.0) * (1.0 - alpha) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, z.size());
  return z[k - 1];
}

BandResult subsample_bands(const PointCloud& cloud, const GridSpec& grid,
                           const std::vector<double>& u_hat, const std::vector<bool>& jump_mask,
                           const CloudEstimator& estimator, const SubsamplingConfig& cfg,
                           int workers) {
  const std::size_t n = cloud.size();
  cfg.validate(n);
  const std::size_t m = grid.spatial_cells();
  if (u_hat.size() != m || jump_mask.size() != m) {
    throw Error(ErrorCode::GridMismatch, "full-sample estimate does not match the grid");
  }
  const auto sizes = cfg.resolved_sizes(n);
  const std::size_t kk = sizes.size();
  const auto reps = static_cast<std::size_t>(cfg.j_reps);
  const std::vector<double> diff_hat = max_forward_difference(u_hat, grid);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> z(reps, std::vector<double>(kk, nan));
  std::vector<std::vector<double>> z_diff(reps, std::vector<double>(kk, nan));
  std::vector<std::string> errors(reps * kk);
  parallel_for(reps * kk, workers, [&](std::size_t task) {
    const std::size_t j = task / kk;
    const std::size_t k = task % kk;
    auto rng = task_rng(cfg.seed, task);
    const PointCloud sample = cloud.subset(draw_rows(n, sizes[k], rng));
    try {
      const std::vector<double> u_star = estimator(sample);
      z[j][k] = sup_deviation(u_star, u_hat);
      z_diff[j][k] = sup_deviation(max_forward_difference(u_star, grid), diff_hat);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SolverFailure && e.code() != ErrorCode::NonFiniteIterate) throw;
      errors[task] = e.what();
    }
  });

  BandResult result;
  std::vector<std::size_t> dropped_per_size(kk, 0);
  for (std::size_t task = 0; task < errors.size(); ++task) {
    if (errors[task].empty()) continue;
    ++result.dropped;
    ++dropped_per_size[task % kk];
    result.warnings.push_back("subsample " + std::to_string(task / kk) + " of size " +
                              std::to_string(sizes[task % kk]) + " dropped: " + errors[task]);
  }
  for (std::size_t k = 0; k < kk; ++k) {
    if (static_cast<double>(dropped_per_size[k]) > 0.2 * static_cast<double>(reps)) {
      throw Error(ErrorCode::TooFewReps, "more than 20% of the subsample solves failed");
    }
  }

  result.surface = rate_band(u_hat, z, sizes, n, cfg);
  result.jumps = rate_band(diff_hat, z_diff, sizes, n, cfg);
  result.significant_jump_mask.assign(m, false);
  for (std::size_t c = 0; c < m; ++c) {
    result.significant_jump_mask[c] =
        jump_mask[c] && (result.jumps.lower[c] > 0.0 || result.jumps.upper[c] < 0.0);
  }
  return result;
}

BandResult subsample_bands(const PointCloud& cloud, const GridSpec& grid, const Fit& full,
                           const EstimatorSettings& settings, const SubsamplingConfig& cfg,
                           int workers) {
  // Non-convergence is counted separately; it does not drop the solve.
  std::atomic<std::size_t> nonconverged{0};
  const CloudEstimator counting = [&](const PointCloud& sample) {
    Fit fit = fit_cloud(sample, grid, settings, &full.state);
    if (!fit.report.converged) ++nonconverged;
    return std::move(fit.estimate.u_hat);
  };
  BandResult result = subsample_bands(cloud, grid, full.estimate.u_hat, full.estimate.jump_mask,
                                      counting, cfg, workers);
  result.nonconverged = nonconverged.load();
  return result;
}

double conformal_quantile(std::vector<double> residuals, double alpha) {
  const double m = static_cast<double>(residuals.size());
  const double k = std::ceil((m + 1.0) * (1.0 - alpha) - 1e-9);
  if (k > m) return std::numeric_limits<double>::infinity();
  const auto idx = static_cast<std::size_t>(std::max(k, 1.0)) - 1;
  std::nth_element(residuals.begin(), residuals.begin() + static_cast<std::ptrdiff_t>(idx),
                   residuals.end());
  return residuals[idx];
}

namespace {

double squared_distance(std::span<const double> a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) d += (a[j] - b[j]) * (a[j] - b[j]);
  return d;
}

// Response of the calibration point closest to each cell center.
std::vector<double> nearest_responses(const PointCloud& calib, const GridSpec& grid) {
  const std::size_t m = grid.spatial_cells();
  std::vector<double> best_d(m, std::numeric_limits<double>::infinity());
  std::vector<double> out(m, 0.0);
  std::vector<std::vector<double>> centers(m);
  for (std::size_t c = 0; c < m; ++c) centers[c] = grid.cell_center(c);
  for (std::size_t i = 0; i < calib.size(); ++i) {
    const std::size_t c = grid.cell_of(calib.point(i));
    const double d = squared_distance(calib.point(i), centers[c]);
    if (d < best_d[c]) {
      best_d[c] = d;
      out[c] = calib.response(i);
    }
  }
  for (std::size_t c = 0; c < m; ++c) {
    if (std::isfinite(best_d[c])) continue;
    for (std::size_t i = 0; i < calib.size(); ++i) {
      const double d = squared_distance(calib.point(i), centers[c]);
      if (d < best_d[c]) {
        best_d[c] = d;
        out[c] = calib.response(i);
      }
    }
  }
  return out;
}

}  // namespace

ConformalResult conformal_bands(const PointCloud& cloud, const GridSpec& grid,
                                const EstimatorSettings& settings, double alpha,
                                std::uint64_t seed) {
  const std::size_t n = cloud.size();
  if (n < 2) throw Error(ErrorCode::EmptyCloud, "conformal bands need at least 2 points");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidConfig, "alpha must be in (0,1)");

  ConformalResult out;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  auto rng = task_rng(seed, 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  out.fit_rows.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n / 2));
  out.calibration_rows.assign(perm.begin() + static_cast<std::ptrdiff_t>(n / 2), perm.end());
  std::sort(out.fit_rows.begin(), out.fit_rows.end());
  std::sort(out.calibration_rows.begin(), out.calibration_rows.end());

  const PointCloud train = cloud.subset(out.fit_rows);
  const PointCloud calib = cloud.subset(out.calibration_rows);
  Fit fit = fit_cloud(train, grid, settings);
  out.converged = fit.report.converged;
  out.u_hat = fit.estimate.u_hat;
  out.jump_mask = fit.estimate.jump_mask;

  const std::vector<double> pred = predict_at(out.u_hat, grid, calib);
  std::vector<double> residuals(calib.size());
  for (std::size_t i = 0; i < calib.size(); ++i) {
    residuals[i] = std::abs(calib.response(i) - pred[i]);
  }
  out.d_alpha = conformal_quantile(residuals, alpha);

  out.diff_hat = max_forward_difference(out.u_hat, grid);
  const std::vector<double> diff_y = max_forward_difference(nearest_responses(calib, grid), grid);
  std::vector<double> residuals_diff(calib.size());
  for (std::size_t i = 0; i < calib.size(); ++i) {
    const std::size_t c = grid.cell_of(calib.point(i));
    residuals_diff[i] = std::abs(diff_y[c] - out.diff_hat[c]);
  }
  out.d_alpha_diff = conformal_quantile(residuals_diff, alpha);

  const std::size_t m = out.u_hat.size();
  out.lower.resize(m);
  out.upper.resize(m);
  out.diff_lower.resize(m);
  out.diff_upper.resize(m);
  out.significant_jump_mask.assign(m, false);
  for (std::size_t c = 0; c < m; ++c) {
    out.lower[c] = out.u_hat[c] - out.d_alpha;
    out.upper[c] = out.u_hat[c] + out.d_alpha;
    out.diff_lower[c] = out.diff_hat[c] - out.d_alpha_diff;
    out.diff_upper[c] = out.diff_hat[c] + out.d_alpha_diff;
    out.significant_jump_mask[c] =
        out.jump_mask[c] && (out.diff_lower[c] > 0.0 || out.diff_upper[c] < 0.0);
  }
  return out;
}

}  // namespace fdr
