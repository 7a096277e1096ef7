#pragma once

// Synthetic ground truth and the Monte Carlo experiment driver.
//
// Points are uniform on the unit box. The noise-free surface is a smooth
// base plus piecewise-constant jumps:
//   1D: base_sd * sqrt(2) * sin(2 pi x) plus steps at given locations;
//   2D: base_sd * (x1 + x2 - 1) / sd(x1 + x2) plus alpha inside a circle;
//   3D: base_sd * (x1 + x2 + x3 - 3/2) / sd(x1 + x2 + x3) plus alpha inside
//       a sphere.
// Each base has standard deviation base_sd over the unit box, so a jump of
// Cohen's d has absolute size alpha = d * base_sd.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fdr/estimator.hpp"
#include "fdr/grid.hpp"
#include "fdr/segmentation.hpp"
#include "fdr/sure.hpp"

namespace fdr {

struct Scenario {
  std::size_t dim = 2;
  double cohens_d = 0.5;
  double sigma = 0.05;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  double base_sd = 0.0;  // 0 selects the dimension default
  // 1D: step locations in (0, 1) and absolute sizes. Empty sizes give every
  // step the size cohens_d * base_sd.
  std::vector<double> step_locations;
  std::vector<double> step_sizes;
  double radius = 0.0;  // 2D/3D; 0 selects the dimension default

  void validate() const;
  double resolved_base_sd() const;
  double resolved_radius() const;
  // Absolute jump size of each discontinuity (one per step in 1D).
  std::vector<double> jump_sizes() const;
};

// Jump profile of the 1D illustration: steps at 0.2, 0.4, 0.6, 0.8.
Scenario fig1_scenario(std::size_t n, std::uint64_t seed);
Scenario circle_scenario(double cohens_d, std::size_t n, std::uint64_t seed);
Scenario sphere_scenario(double cohens_d, std::size_t n, std::uint64_t seed);

double base_value(const Scenario& sc, std::span<const double> x);
double truth_value(const Scenario& sc, std::span<const double> x);

PointCloud sample_cloud(const Scenario& sc);

// Truth on a grid over the unit box: the surface at cell centers, and the
// cells met by the discontinuity set. Cells are taken closed on their upper
// faces and open on their lower faces, so a 1D step on a cell boundary
// belongs to the cell below it. Jump sizes are signed (outside to inside,
// or left to right in 1D).
Truth rasterize_truth(const Scenario& sc, const GridSpec& grid);

struct Sample {
  Scenario scenario;
  PointCloud cloud;
  GridSpec grid;
  Truth truth;
};

std::vector<Range> unit_box(std::size_t dim);

// Cell counts per axis: n / 20 in 1D, `cells_per_axis` otherwise.
std::vector<std::size_t> default_cells(const Scenario& sc, std::size_t cells_per_axis);

Sample generate(const Scenario& sc, std::span<const std::size_t> n_cells, std::size_t s_levels,
                double value_padding = 0.05);

// One simulation block: rows sharing the same jump geometry and d, with one
// (lambda, nu) for the whole block.
struct ScenarioBlock {
  std::vector<Scenario> rows;
  std::optional<double> lambda;  // both set: fixed theta; otherwise SURE
  std::optional<double> nu;
};

struct MonteCarloConfig {
  std::size_t cells_per_axis = 20;
  std::size_t s_levels = 32;
  double value_padding = 0.05;
  EstimatorSettings settings;
  SureConfig sure;
  std::size_t sure_cells_per_axis = 20;
  std::uint64_t seed = 0;
  int workers = 1;
};

using SampleEstimator = std::function<FdrEstimate(const Sample& sample, double lambda, double nu)>;

struct TableRow {
  std::size_t block = 0;
  std::size_t dim = 0;
  double cohens_d = 0.0;
  std::size_t n = 0;
  double alpha = 0.0;
  Metrics metrics;  // averaged over the successful reps
  double lambda = 0.0;
  double nu = 0.0;
  std::size_t reps = 0;
  std::size_t failed = 0;
  std::size_t nonconverged = 0;
};

// Per-rep metrics, row-major in (block, row, rep).
struct MonteCarloResult {
  std::vector<TableRow> rows;
  std::vector<Metrics> rep_metrics;
  std::vector<bool> rep_ok;
  std::vector<std::string> warnings;
};

// Every rep draws a fresh cloud; blocks without a fixed theta run a SURE
// search on a pilot cloud of the block's largest n. The estimator defaults
// to the full FDR fit.
MonteCarloResult run_monte_carlo(const std::vector<ScenarioBlock>& blocks, std::size_t reps,
                                 const MonteCarloConfig& cfg,
                                 const SampleEstimator& estimator = {});

void write_table_csv(std::ostream& out, const std::vector<TableRow>& rows);

}  // namespace fdr
