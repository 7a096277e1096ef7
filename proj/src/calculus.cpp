#include "fdr/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fdr/error.hpp"

namespace fdr {

std::size_t lifted_stride(const GridSpec& grid, std::size_t axis) {
  if (axis == grid.dim) return 1;
  return grid.s_levels * grid.spatial_stride(axis);
}

std::size_t lifted_extent(const GridSpec& grid, std::size_t axis) {
  return axis == grid.dim ? grid.s_levels : grid.n_cells[axis];
}

std::vector<double> grid_weights(const GridSpec& grid) {
  std::vector<double> w(grid.dim + 1);
  for (std::size_t j = 0; j < grid.dim; ++j) w[j] = static_cast<double>(grid.n_cells[j]);
  w[grid.dim] = static_cast<double>(grid.s_levels);
  return w;
}

namespace {

void check_dual_shape(const DualField& p, const GridSpec& grid) {
  if (p.components != grid.dim + 1 || p.component_size != grid.lifted_cells() ||
      p.data.size() != p.components * p.component_size) {
    throw Error(ErrorCode::ShapeMismatch, "dual field does not match the grid");
  }
}

}  // namespace

void weighted_gradient(std::span<const double> v, const GridSpec& grid,
                       std::span<const double> weights, DualField& out) {
  const std::size_t total = grid.lifted_cells();
  if (v.size() != total || weights.size() != grid.dim + 1) {
    throw Error(ErrorCode::ShapeMismatch, "primal field does not match the grid");
  }
  check_dual_shape(out, grid);
  for (std::size_t axis = 0; axis <= grid.dim; ++axis) {
    const std::size_t st = lifted_stride(grid, axis);
    const std::size_t n = lifted_extent(grid, axis);
    const std::size_t block = st * n;
    const double w = weights[axis];
    double* g = out.component(axis).data();
    for (std::size_t base = 0; base < total; base += block) {
      for (std::size_t k = 0; k + 1 < n; ++k) {
        const std::size_t row = base + k * st;
        for (std::size_t r = 0; r < st; ++r) g[row + r] = w * (v[row + st + r] - v[row + r]);
      }
      const std::size_t last = base + (n - 1) * st;
      for (std::size_t r = 0; r < st; ++r) g[last + r] = 0.0;
    }
  }
}

void weighted_adjoint(const DualField& p, const GridSpec& grid, std::span<const double> weights,
                      std::span<double> out) {
  const std::size_t total = grid.lifted_cells();
  check_dual_shape(p, grid);
  if (out.size() != total || weights.size() != grid.dim + 1) {
    throw Error(ErrorCode::ShapeMismatch, "primal field does not match the grid");
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t axis = 0; axis <= grid.dim; ++axis) {
    const std::size_t st = lifted_stride(grid, axis);
    const std::size_t n = lifted_extent(grid, axis);
    const std::size_t block = st * n;
    const double w = weights[axis];
    const double* q = p.component(axis).data();
    for (std::size_t base = 0; base < total; base += block) {
      // out(k) += w (p(k - e) - p(k)), with p(-1) = 0 and p(n - 1) ignored.
      for (std::size_t r = 0; r < st; ++r) out[base + r] -= w * q[base + r];
      for (std::size_t k = 1; k + 1 < n; ++k) {
        const std::size_t row = base + k * st;
        for (std::size_t r = 0; r < st; ++r) out[row + r] += w * (q[row - st + r] - q[row + r]);
      }
      const std::size_t last = base + (n - 1) * st;
      for (std::size_t r = 0; r < st; ++r) out[last + r] += w * q[last - st + r];
    }
  }
}

void zero_outflow(DualField& p, const GridSpec& grid) {
  check_dual_shape(p, grid);
  const std::size_t total = grid.lifted_cells();
  for (std::size_t axis = 0; axis <= grid.dim; ++axis) {
    const std::size_t st = lifted_stride(grid, axis);
    const std::size_t block = st * lifted_extent(grid, axis);
    double* q = p.component(axis).data();
    for (std::size_t base = block - st; base < total; base += block) {
      std::fill_n(q + base, st, 0.0);
    }
  }
}

DualField grad_forward(const PrimalField& v, const GridSpec& grid) {
  DualField out(grid);
  const auto w = grid_weights(grid);
  weighted_gradient(v.values, grid, w, out);
  return out;
}

PrimalField divergence_adjoint(const DualField& p, const GridSpec& grid) {
  PrimalField out(grid);
  const auto w = grid_weights(grid);
  weighted_adjoint(p, grid, w, out.values);
  return out;
}

double pairing(const DualField& p, const PrimalField& v, const GridSpec& grid, bool normalized) {
  check_dual_shape(p, grid);
  const DualField g = grad_forward(v, grid);
  double sum = 0.0;
  for (std::size_t i = 0; i < g.data.size(); ++i) sum += g.data[i] * p.data[i];
  if (normalized) sum /= static_cast<double>(grid.lifted_cells());
  return sum;
}

double estimate_operator_norm_sq(const GridSpec& grid, int iterations, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  PrimalField v(grid);
  for (double& x : v.values) x = normal(rng);
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    double norm = 0.0;
    for (double x : v.values) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (double& x : v.values) x /= norm;
    const PrimalField next = divergence_adjoint(grad_forward(v, grid), grid);
    double rayleigh = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) rayleigh += v[i] * next[i];
    estimate = rayleigh;
    v = next;
  }
  return estimate;
}

}  // namespace fdr
