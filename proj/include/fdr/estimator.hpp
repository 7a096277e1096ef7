#pragma once

// The full estimator: bin a point cloud onto a grid, solve the lifted
// problem and decode the surface and jump set.

#include <optional>
#include <vector>

#include "fdr/grid.hpp"
#include "fdr/segmentation.hpp"
#include "fdr/solver.hpp"

namespace fdr {

struct EstimatorSettings {
  WeightMode weights = WeightMode::Uniform;
  std::optional<double> winsor_q;
  DensityMode density = DensityMode::Histogram;
  SolverConfig solver;
};

struct Fit {
  BinnedData binned;
  SolveReport report;
  FdrEstimate estimate;
  SolverState state;  // final iterate, for warm starts on the same grid
};

Fit fit_binned(BinnedData binned, const GridSpec& grid, const SolverConfig& solver,
               const SolverState* init = nullptr);
Fit fit_cloud(const PointCloud& cloud, const GridSpec& grid, const EstimatorSettings& settings,
              const SolverState* init = nullptr);

// Value of a per-cell surface at the cell containing each point (points
// outside the domain box use the nearest cell).
std::vector<double> predict_at(const std::vector<double>& surface, const GridSpec& grid,
                               const PointCloud& cloud);

}  // namespace fdr
