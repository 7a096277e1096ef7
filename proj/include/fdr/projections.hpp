#pragma once

#include <span>

#include "fdr/calculus.hpp"
#include "fdr/grid.hpp"

namespace fdr {

// Clip to [0, 1] and pin the first lifted level to 1 and the last to 0.
void project_C_inplace(std::span<double> v, const GridSpec& grid);
PrimalField project_C(PrimalField v, const GridSpec& grid);

// Constraint {p_t >= alpha |p_x|^2 - offset} at one lattice point.
struct ParabolaSpec {
  double alpha = 1.0;
  double offset = 0.0;

  // alpha = 1 / (4 fx), offset = lambda fx (t - f)^2.
  static ParabolaSpec from_cell(double density, double lambda, double level, double response);
};

// Euclidean projection of `p` = (p_x, p_t) onto the shifted parabola
// epigraph, in place. The last entry of `p` is p_t.
void project_parabola(std::span<double> p, const ParabolaSpec& spec);

// Real root of t^3 + 3 b t - 2 a = 0 (a >= 0) that the parabola projection
// uses; exposed for testing the branch selection.
double parabola_cubic_root(double a, double b);

// Scale `s` back onto the Euclidean ball of radius `nu` if it lies outside.
void project_ball(std::span<double> s, double nu);

}  // namespace fdr
