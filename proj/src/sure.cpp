#include "fdr/sure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "fdr/error.hpp"
#include "fdr/parallel.hpp"
#include "fdr/random.hpp"

namespace fdr {

void SureConfig::validate() const {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw Error(ErrorCode::InvalidConfig, "delta must be positive");
  }
  if (r_draws < 1) throw Error(ErrorCode::InvalidConfig, "r_draws must be >= 1");
  if (sigma && !(*sigma >= 0.0 && std::isfinite(*sigma))) {
    throw Error(ErrorCode::InvalidConfig, "sigma must be a nonnegative number");
  }
  for (const Range& r : {lambda_range, nu_range}) {
    if (!(r.lo > 0.0) || !(r.hi >= r.lo) || !std::isfinite(r.hi)) {
      throw Error(ErrorCode::InvalidConfig, "search ranges must be positive and ordered");
    }
  }
  if (n_lambda < 1 || n_nu < 1) throw Error(ErrorCode::InvalidConfig, "empty search grid");
}

double sure_value(const std::vector<double>& y, const std::vector<double>& sigma_sq,
                  const std::vector<bool>& observed, double delta, int r_draws,
                  std::uint64_t seed, const CellEstimator& estimator,
                  const std::function<void(std::vector<double>&)>& refill) {
  const std::size_t m = y.size();
  if (sigma_sq.size() != m || observed.size() != m) {
    throw Error(ErrorCode::ShapeMismatch, "SURE inputs differ in length");
  }
  const auto count = static_cast<std::size_t>(std::count(observed.begin(), observed.end(), true));
  if (count == 0) throw Error(ErrorCode::EmptyCloud, "no observed cells");
  const double cells = static_cast<double>(count);

  const std::vector<double> u = estimator(y);
  if (u.size() != m) throw Error(ErrorCode::ShapeMismatch, "estimator changed the length");
  double fidelity = 0.0;
  double variance = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    if (!observed[c]) continue;
    fidelity += (y[c] - u[c]) * (y[c] - u[c]);
    variance += sigma_sq[c];
  }

  std::normal_distribution<double> normal;
  double total = 0.0;
  for (int r = 0; r < r_draws; ++r) {
    auto rng = task_rng(seed, static_cast<std::uint64_t>(r));
    std::vector<double> b(m, 0.0);
    double norm_sq = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      if (!observed[c]) continue;
      b[c] = normal(rng);
      norm_sq += b[c] * b[c];
    }
    const double scale = norm_sq > 0.0 ? std::sqrt(cells / norm_sq) : 0.0;
    std::vector<double> y_pert = y;
    for (std::size_t c = 0; c < m; ++c) {
      b[c] *= scale;
      y_pert[c] += delta * b[c];
    }
    if (refill) refill(y_pert);
    const std::vector<double> u_pert = estimator(y_pert);
    double divergence = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      if (observed[c]) divergence += sigma_sq[c] * b[c] * (u_pert[c] - u[c]) / delta;
    }
    total += (fidelity - variance + 2.0 * divergence) / cells;
  }
  return total / r_draws;
}

double estimate_sigma(const PointCloud& cloud, const GridSpec& grid) {
  const std::size_t m = grid.spatial_cells();
  std::vector<double> sum(m, 0.0);
  std::vector<double> sum_sq(m, 0.0);
  std::vector<std::size_t> count(m, 0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const std::size_t c = grid.cell_of(cloud.point(i));
    sum[c] += cloud.response(i);
    ++count[c];
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const std::size_t c = grid.cell_of(cloud.point(i));
    const double e = cloud.response(i) - sum[c] / static_cast<double>(count[c]);
    sum_sq[c] += e * e;
  }
  double ss = 0.0;
  std::size_t dof = 0;
  for (std::size_t c = 0; c < m; ++c) {
    if (count[c] < 2) continue;
    ss += sum_sq[c];
    dof += count[c] - 1;
  }
  return dof > 0 ? std::sqrt(ss / static_cast<double>(dof)) : 0.0;
}

namespace {

struct Prepared {
  BinnedData binned;
  std::vector<double> sigma_sq;
  std::vector<bool> observed;
  double sigma = 0.0;
};

Prepared prepare(const PointCloud& cloud, const GridSpec& grid,
                 const EstimatorSettings& settings, const SureConfig& cfg) {
  Prepared p;
  p.binned = bin_points(cloud, grid, settings.weights, settings.winsor_q, settings.density);
  p.sigma = cfg.sigma ? *cfg.sigma : estimate_sigma(cloud, grid);
  const std::size_t m = grid.spatial_cells();
  p.observed.resize(m);
  p.sigma_sq.resize(m);
  for (std::size_t c = 0; c < m; ++c) {
    p.observed[c] = !p.binned.empty_mask[c];
    const double var = p.sigma * p.sigma;
    p.sigma_sq[c] = cfg.sigma_mode == SigmaMode::PerCell && p.binned.count[c] > 0
                        ? var / static_cast<double>(p.binned.count[c])
                        : var;
  }
  return p;
}

double evaluate(const Prepared& p, const GridSpec& grid, const SolverConfig& solver,
                const SureConfig& cfg) {
  std::optional<SolverState> base;
  const CellEstimator estimator = [&](const std::vector<double>& y) {
    BinnedData data = p.binned;
    data.f_hat = y;
    Fit fit = fit_binned(std::move(data), grid, solver, base ? &*base : nullptr);
    if (!fit.report.converged) throw Error(ErrorCode::SolverFailure, "solve did not converge");
    if (!base) base = std::move(fit.state);
    return fit.estimate.u_hat;
  };
  const auto refill = [&](std::vector<double>& y) {
    fill_empty_cells(y, p.binned.empty_mask, grid);
  };
  try {
    return sure_value(p.binned.f_hat, p.sigma_sq, p.observed, cfg.delta, cfg.r_draws, cfg.seed,
                      estimator, refill);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SolverFailure || e.code() == ErrorCode::NonFiniteIterate) {
      return std::numeric_limits<double>::infinity();
    }
    throw;
  }
}

}  // namespace

double sure_value(const PointCloud& cloud, const GridSpec& grid, double lambda, double nu,
                  const EstimatorSettings& settings, const SureConfig& cfg) {
  cfg.validate();
  const Prepared p = prepare(cloud, grid, settings, cfg);
  SolverConfig solver = settings.solver;
  solver.lambda = lambda;
  solver.nu = nu;
  return evaluate(p, grid, solver, cfg);
}

std::vector<double> sample_axis(const Range& range, std::size_t n, bool log_uniform,
                                std::uint64_t seed, std::uint64_t stream) {
  if (!(range.hi > range.lo)) return {range.lo};
  std::vector<double> out(n);
  auto rng = task_rng(seed, stream);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (double& x : out) {
    const double u = unit(rng);
    x = log_uniform ? std::exp(std::log(range.lo) + u * (std::log(range.hi) - std::log(range.lo)))
                    : range.lo + u * range.width();
  }
  std::sort(out.begin(), out.end());
  return out;
}

SureResult sure_search(const PointCloud& cloud, const GridSpec& grid,
                       const EstimatorSettings& settings, const SureConfig& cfg, int workers) {
  cfg.validate();
  const Prepared p = prepare(cloud, grid, settings, cfg);
  // Streams 0..r_draws-1 of the seed are the probes; the axes use their own.
  const auto lambdas = sample_axis(cfg.lambda_range, cfg.n_lambda, cfg.log_uniform, cfg.seed,
                                   1000001);
  const auto nus = sample_axis(cfg.nu_range, cfg.n_nu, cfg.log_uniform, cfg.seed, 1000002);

  SureResult result;
  result.sigma = p.sigma;
  result.table.resize(lambdas.size() * nus.size());
  parallel_for(result.table.size(), workers, [&](std::size_t k) {
    SureRow& row = result.table[k];
    row.lambda = lambdas[k / nus.size()];
    row.nu = nus[k % nus.size()];
    SolverConfig solver = settings.solver;
    solver.lambda = row.lambda;
    solver.nu = row.nu;
    row.eta = evaluate(p, grid, solver, cfg);
    row.converged = std::isfinite(row.eta);
  });

  const auto best = std::min_element(result.table.begin(), result.table.end(),
                                     [](const SureRow& a, const SureRow& b) { return a.eta < b.eta; });
  if (!std::isfinite(best->eta)) {
    throw Error(ErrorCode::AllCandidatesFailed, "no SURE candidate produced a finite score");
  }
  result.lambda = best->lambda;
  result.nu = best->nu;
  result.eta = best->eta;
  return result;
}

}  // namespace fdr
