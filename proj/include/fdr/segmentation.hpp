#pragma once

#include <span>
#include <vector>

#include "fdr/calculus.hpp"
#include "fdr/grid.hpp"

namespace fdr {

struct FdrEstimate {
  std::vector<double> u_hat;         // original response units
  std::vector<bool> jump_mask;
  std::vector<double> jump_size;     // original units, 0 off the jump set
  std::vector<double> gradient_mag;  // unit lifted-axis units, per-cell differences
};

// Layer-count decoding: u(k) = t_min + (t_max - t_min) (#{l : v(k, l) > threshold} - 0.5) / S.
std::vector<double> threshold_level_set(const PrimalField& v_star, const GridSpec& grid,
                                        double threshold = 0.5);

struct JumpSet {
  std::vector<bool> mask;
  std::vector<double> size;
  std::vector<double> gradient_mag;
};

// Forward differences of u between neighbouring cells, with u mapped to the
// unit lifted axis. A cell is on the jump set when the Euclidean norm of its
// differences reaches sqrt(nu); its jump size is the signed difference (in
// original units) along the axis with the largest magnitude, first axis on
// ties.
JumpSet extract_jump_set(std::span<const double> u_hat, const GridSpec& grid, double nu);

// Signed largest-magnitude forward difference per cell, original units.
std::vector<double> max_forward_difference(std::span<const double> u, const GridSpec& grid);

FdrEstimate make_estimate(const PrimalField& v_star, const GridSpec& grid, double nu);

struct Truth {
  std::vector<double> surface;
  std::vector<bool> jump_mask;
  std::vector<double> jump_size;
};

struct Metrics {
  double mse_u = 0.0;
  double alpha_hat = 0.0;  // mean estimated jump magnitude on detected true-jump cells
  double mse_tau = 0.0;
  double bias_tau = 0.0;
  double fnr = 0.0;
  double fpr = 0.0;
};

// Jump sizes are compared as magnitudes over true-jump cells that the
// estimate also flags; when none is flagged all true-jump cells are used.
Metrics compute_metrics(const FdrEstimate& estimate, const Truth& truth);

}  // namespace fdr
