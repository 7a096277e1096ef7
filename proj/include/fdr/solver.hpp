#pragma once

// First-order primal-dual solver for the lifted saddle problem
//
//   min_{v in C} max_{p in K} <p, D_N v>
//
// where K couples a per-point parabola constraint (fidelity and gradient
// penalty) with a bound nu on every partial sum of p^x along the lifted
// axis. The partial-sum bound is decoupled with auxiliary variables s and
// Lagrange multipliers mu, one d-vector per (cell, level pair).
//
// Internally the dual variable is held rescaled so that the difference
// operator has unit-spacing weights (N_j / max N along the spatial axes,
// 1 along the lifted axis). The fixed step sizes tau = sigma = 1 / (4 (d+1))
// then satisfy tau sigma ||K||^2 < 1. The rescaling is a change of variables
// of the same saddle problem; `unscaled_dual()` maps back.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "fdr/calculus.hpp"
#include "fdr/grid.hpp"

namespace fdr {

struct SolverConfig {
  double lambda = 100.0;
  double nu = 1e-3;
  double tol = 5e-5;
  int max_iter = 5000;
  int check_every = 10;

  void validate() const;
};

// Full iterate of the solver in its internal (rescaled) variables. Used to
// start a solve on new data from an earlier solution on the same grid.
struct SolverState {
  std::vector<double> v;
  std::vector<double> q;
  std::vector<double> s;
  std::vector<double> mu;
};

struct SolveReport {
  PrimalField v_star;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  double energy = 0.0;             // unnormalized pairing <p, D_N v>
  double energy_normalized = 0.0;  // divided by the lifted cell count
  double feasibility_gap = 0.0;    // max violation of the constraint set at exit
};

// max(|v_curr - v_prev|_inf / max(|v_curr|_inf, 1), same for p).
double residual(std::span<const double> v_prev, std::span<const double> v_curr,
                std::span<const double> p_prev, std::span<const double> p_curr);

// Per-cell constraint data after density flooring and unit normalization.
struct CellData {
  std::vector<double> density;   // on the unit cube
  std::vector<double> response;  // on the unit lifted axis
};
CellData normalized_cell_data(const BinnedData& binned, const GridSpec& grid);

// Unit lifted-axis value attached to the t-face above level `l`. A subgraph
// indicator that drops after level l decodes to exactly this value.
inline double level_value(std::size_t l, std::size_t s_levels) {
  return (static_cast<double>(l) + 0.5) / static_cast<double>(s_levels);
}

class PrimalDualSolver {
 public:
  using Observer = std::function<void(const PrimalDualSolver&)>;

  PrimalDualSolver(const BinnedData& binned, const GridSpec& grid, SolverConfig cfg);

  // Replaces the current iterate; the state must come from a solver on a
  // grid of the same shape.
  void warm_start(const SolverState& state);
  SolverState state() const;

  // One pass of the six-step update.
  void step();
  SolveReport run(const Observer& observer = {});

  int iteration() const noexcept { return iteration_; }
  const GridSpec& grid() const noexcept { return grid_; }
  const SolverConfig& config() const noexcept { return cfg_; }
  std::size_t pair_count() const noexcept { return pairs_; }

  std::span<const double> primal() const noexcept { return v_; }
  DualField unscaled_dual() const;

  // Largest amount by which any dual point violates its parabola
  // constraint, in unscaled units.
  double max_parabola_violation() const;
  // Largest excess of |s| over nu, in unscaled units.
  double max_aux_excess() const;
  // Largest excess of |(1/S) sum_{s1..s2} p^x| over nu.
  double max_partial_sum_excess() const;
  bool primal_feasible() const;

 private:
  void update_pairs();

  GridSpec grid_;
  SolverConfig cfg_;
  std::size_t cells_ = 0;
  std::size_t levels_ = 0;
  std::size_t dim_ = 0;
  std::size_t pairs_ = 0;
  double x_scale_ = 1.0;  // p^x = q^x / x_scale_
  double t_scale_ = 1.0;  // p^t = q^t / t_scale_
  double nu_scaled_ = 0.0;
  double tau_v_ = 0.0;
  double sigma_p_ = 0.0;
  double tau_mu_ = 0.0;
  double sigma_s_ = 1.0;
  std::vector<double> weights_;

  std::vector<double> alpha_;   // scaled parabola curvature per cell
  std::vector<double> offset_;  // scaled parabola offset per lifted point

  std::vector<double> v_;
  std::vector<double> v_bar_;
  DualField q_;
  std::vector<double> s_;
  std::vector<double> mu_;
  std::vector<double> q_prev_x_;  // q^x before the current dual update
  std::vector<double> ptilde_;  // d x lifted cells

  DualField grad_buf_;
  std::vector<double> div_buf_;
  std::vector<double> prefix_;
  std::vector<double> prefix_old_;
  std::vector<double> diff_;
  std::vector<double> scratch_;
  int iteration_ = 0;
};

SolveReport solve(const BinnedData& binned, const GridSpec& grid, const SolverConfig& cfg,
                  const PrimalDualSolver::Observer& observer = {},
                  const SolverState* init = nullptr, SolverState* final_state = nullptr);

}  // namespace fdr
