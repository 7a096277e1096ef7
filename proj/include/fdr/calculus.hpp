#pragma once

// Discrete calculus on the lifted (N_1 x ... x N_d) x S lattice.
//
// Primal values sit at cell centres. Dual component j sits on the face
// between cell k and its forward neighbour along axis j; the component at
// the last index of that axis carries no flux (Neumann).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fdr/grid.hpp"

namespace fdr {

struct PrimalField {
  std::vector<double> values;

  PrimalField() = default;
  explicit PrimalField(const GridSpec& grid, double fill = 0.0)
      : values(grid.lifted_cells(), fill) {}

  std::size_t size() const noexcept { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

struct DualField {
  std::size_t components = 0;
  std::size_t component_size = 0;
  std::vector<double> data;

  DualField() = default;
  DualField(std::size_t comps, std::size_t size)
      : components(comps), component_size(size), data(comps * size, 0.0) {}
  explicit DualField(const GridSpec& grid) : DualField(grid.dim + 1, grid.lifted_cells()) {}

  std::span<double> component(std::size_t j) {
    return {data.data() + j * component_size, component_size};
  }
  std::span<const double> component(std::size_t j) const {
    return {data.data() + j * component_size, component_size};
  }
  // Spatial components p^x are 0..d-1, the lifted component p^t is d.
  std::span<const double> p_t() const { return component(components - 1); }
};

// Stride of lattice axis `axis` (0..d-1 spatial, d lifted) in a lifted field.
std::size_t lifted_stride(const GridSpec& grid, std::size_t axis);
std::size_t lifted_extent(const GridSpec& grid, std::size_t axis);

// Axis weights of D_N: N_1..N_d for the spatial axes and S for the lifted one.
std::vector<double> grid_weights(const GridSpec& grid);

// Weighted forward differences, out_j(k) = w_j (v(k + e_j) - v(k)), zero at
// the last index along j. `out` must already have the field's shape.
void weighted_gradient(std::span<const double> v, const GridSpec& grid,
                       std::span<const double> weights, DualField& out);

// Exact adjoint of weighted_gradient under the Euclidean pairing
// (negative weighted backward divergence).
void weighted_adjoint(const DualField& p, const GridSpec& grid, std::span<const double> weights,
                      std::span<double> out);

// Zeroes every component on its outflow face (last index along its axis).
void zero_outflow(DualField& p, const GridSpec& grid);

DualField grad_forward(const PrimalField& v, const GridSpec& grid);
PrimalField divergence_adjoint(const DualField& p, const GridSpec& grid);

// sum_k sum_j N_j (v(k + e_j) - v(k)) p_j(k); divided by N_1...N_d * S when
// `normalized` is set.
double pairing(const DualField& p, const PrimalField& v, const GridSpec& grid,
               bool normalized = false);

// Power-iteration estimate of ||D_N||^2.
double estimate_operator_norm_sq(const GridSpec& grid, int iterations = 200,
                                 std::uint64_t seed = 1);

}  // namespace fdr
