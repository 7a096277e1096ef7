#pragma once

#include <random>
#include <vector>

#include "fdr/grid.hpp"

namespace fdr::test {

inline GridSpec unit_grid(std::vector<std::size_t> cells, std::size_t levels,
                          Range values = {0.0, 1.0}) {
  GridSpec g;
  g.dim = cells.size();
  g.n_cells = std::move(cells);
  g.s_levels = levels;
  g.domain_box.assign(g.dim, Range{0.0, 1.0});
  g.value_range = values;
  return g;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0,
                                         double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// Noiseless or noisy 1D cloud on a regular design.
template <class F>
PointCloud cloud_1d(std::size_t n, F&& f, double sigma = 0.0, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> x(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    y[i] = f(x[i]) + (sigma > 0.0 ? sigma * noise(rng) : 0.0);
  }
  return PointCloud(1, std::move(x), std::move(y));
}

// Binned data with unit density and one observation per cell.
inline BinnedData binned_from(std::vector<double> f) {
  BinnedData b;
  const std::size_t m = f.size();
  b.f_hat = std::move(f);
  b.fx_hat.assign(m, 1.0);
  b.count.assign(m, 1);
  b.empty_mask.assign(m, false);
  return b;
}

}  // namespace fdr::test
