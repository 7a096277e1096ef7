#include "fdr/segmentation.hpp"

#include <cmath>

#include "fdr/error.hpp"

namespace fdr {

std::vector<double> threshold_level_set(const PrimalField& v_star, const GridSpec& grid,
                                        double threshold) {
  const std::size_t s = grid.s_levels;
  if (v_star.size() != grid.lifted_cells()) {
    throw Error(ErrorCode::ShapeMismatch, "primal field does not match the grid");
  }
  std::vector<double> u(grid.spatial_cells());
  for (std::size_t c = 0; c < u.size(); ++c) {
    std::size_t above = 0;
    for (std::size_t l = 0; l < s; ++l) above += v_star[c * s + l] > threshold ? 1 : 0;
    const double t = (static_cast<double>(above) - 0.5) / static_cast<double>(s);
    u[c] = grid.from_unit_value(t);
  }
  return u;
}

namespace {

struct Differences {
  std::vector<double> norm;  // unit-axis Euclidean norm
  std::vector<double> best;  // signed original-units value of the largest axis
};

Differences forward_differences(std::span<const double> u, const GridSpec& grid) {
  const std::size_t m = grid.spatial_cells();
  if (u.size() != m) throw Error(ErrorCode::ShapeMismatch, "surface does not match the grid");
  Differences out{std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
  const double range = grid.value_range.width();
  for (std::size_t c = 0; c < m; ++c) {
    double norm_sq = 0.0;
    double best_abs = -1.0;
    for (std::size_t j = 0; j < grid.dim; ++j) {
      const std::size_t st = grid.spatial_stride(j);
      const std::size_t k = (c / st) % grid.n_cells[j];
      const double diff = k + 1 < grid.n_cells[j] ? u[c + st] - u[c] : 0.0;
      const double unit = diff / range;
      norm_sq += unit * unit;
      if (std::abs(diff) > best_abs) {
        best_abs = std::abs(diff);
        out.best[c] = diff;
      }
    }
    out.norm[c] = std::sqrt(norm_sq);
  }
  return out;
}

}  // namespace

std::vector<double> max_forward_difference(std::span<const double> u, const GridSpec& grid) {
  return forward_differences(u, grid).best;
}

JumpSet extract_jump_set(std::span<const double> u_hat, const GridSpec& grid, double nu) {
  Differences diffs = forward_differences(u_hat, grid);
  const std::size_t m = diffs.norm.size();
  JumpSet out;
  out.mask.assign(m, false);
  out.size.assign(m, 0.0);
  const double threshold = std::sqrt(std::max(nu, 0.0));
  for (std::size_t c = 0; c < m; ++c) {
    if (diffs.norm[c] > 0.0 && diffs.norm[c] >= threshold) {
      out.mask[c] = true;
      out.size[c] = diffs.best[c];
    }
  }
  out.gradient_mag = std::move(diffs.norm);
  return out;
}

FdrEstimate make_estimate(const PrimalField& v_star, const GridSpec& grid, double nu) {
  FdrEstimate est;
  est.u_hat = threshold_level_set(v_star, grid);
  JumpSet jumps = extract_jump_set(est.u_hat, grid, nu);
  est.jump_mask = std::move(jumps.mask);
  est.jump_size = std::move(jumps.size);
  est.gradient_mag = std::move(jumps.gradient_mag);
  return est;
}

Metrics compute_metrics(const FdrEstimate& estimate, const Truth& truth) {
  const std::size_t m = truth.surface.size();
  if (estimate.u_hat.size() != m || estimate.jump_mask.size() != m ||
      estimate.jump_size.size() != m || truth.jump_mask.size() != m ||
      truth.jump_size.size() != m) {
    throw Error(ErrorCode::GridMismatch, "estimate and truth live on different grids");
  }
  Metrics out;
  double sq = 0.0;
  std::size_t true_jumps = 0;
  std::size_t missed = 0;
  std::size_t spurious = 0;
  std::size_t detected = 0;
  for (std::size_t c = 0; c < m; ++c) {
    const double e = estimate.u_hat[c] - truth.surface[c];
    sq += e * e;
    if (truth.jump_mask[c]) {
      ++true_jumps;
      if (estimate.jump_mask[c]) {
        ++detected;
      } else {
        ++missed;
      }
    } else if (estimate.jump_mask[c]) {
      ++spurious;
    }
  }
  out.mse_u = sq / static_cast<double>(m);
  out.fnr = true_jumps ? static_cast<double>(missed) / static_cast<double>(true_jumps) : 0.0;
  const std::size_t non_jumps = m - true_jumps;
  out.fpr = non_jumps ? static_cast<double>(spurious) / static_cast<double>(non_jumps) : 0.0;

  if (true_jumps > 0) {
    const bool use_detected = detected > 0;
    double sum_hat = 0.0;
    double sum_err = 0.0;
    double sum_sq = 0.0;
    std::size_t n = 0;
    for (std::size_t c = 0; c < m; ++c) {
      if (!truth.jump_mask[c] || (use_detected && !estimate.jump_mask[c])) continue;
      const double hat = std::abs(estimate.jump_size[c]);
      const double err = hat - std::abs(truth.jump_size[c]);
      sum_hat += hat;
      sum_err += err;
      sum_sq += err * err;
      ++n;
    }
    out.alpha_hat = sum_hat / static_cast<double>(n);
    out.bias_tau = sum_err / static_cast<double>(n);
    out.mse_tau = sum_sq / static_cast<double>(n);
  }
  return out;
}

}  // namespace fdr
