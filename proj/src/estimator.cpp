#include "fdr/estimator.hpp"

namespace fdr {

Fit fit_binned(BinnedData binned, const GridSpec& grid, const SolverConfig& solver,
               const SolverState* init) {
  Fit fit;
  fit.binned = std::move(binned);
  fit.report = solve(fit.binned, grid, solver, {}, init, &fit.state);
  fit.estimate = make_estimate(fit.report.v_star, grid, solver.nu);
  return fit;
}

Fit fit_cloud(const PointCloud& cloud, const GridSpec& grid, const EstimatorSettings& settings,
              const SolverState* init) {
  return fit_binned(bin_points(cloud, grid, settings.weights, settings.winsor_q, settings.density),
                    grid, settings.solver, init);
}

std::vector<double> predict_at(const std::vector<double>& surface, const GridSpec& grid,
                               const PointCloud& cloud) {
  std::vector<double> out(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) out[i] = surface[grid.cell_of(cloud.point(i))];
  return out;
}

}  // namespace fdr
