#include "fdr/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fdr/error.hpp"

namespace fdr {

PointCloud::PointCloud(std::size_t dim, std::vector<double> x, std::vector<double> y)
    : dim_(dim), x_(std::move(x)), y_(std::move(y)) {
  if (dim_ == 0) throw Error(ErrorCode::ShapeMismatch, "point dimension must be >= 1");
  if (x_.size() != y_.size() * dim_) {
    throw Error(ErrorCode::ShapeMismatch, "coordinate array does not match n * d");
  }
  for (double v : x_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "non-finite coordinate");
  }
  for (double v : y_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "non-finite response");
  }
}

PointCloud PointCloud::subset(std::span<const std::size_t> rows) const {
  std::vector<double> x;
  std::vector<double> y;
  x.reserve(rows.size() * dim_);
  y.reserve(rows.size());
  for (std::size_t r : rows) {
    auto p = point(r);
    x.insert(x.end(), p.begin(), p.end());
    y.push_back(y_[r]);
  }
  PointCloud out;
  out.dim_ = dim_;
  out.x_ = std::move(x);
  out.y_ = std::move(y);
  return out;
}

void GridSpec::validate() const {
  if (dim == 0 || n_cells.size() != dim || domain_box.size() != dim) {
    throw Error(ErrorCode::GridMismatch, "grid dimension is inconsistent");
  }
  for (std::size_t n : n_cells) {
    if (n < 2) throw Error(ErrorCode::InvalidConfig, "every axis needs at least 2 cells");
  }
  if (s_levels < 2) throw Error(ErrorCode::InvalidConfig, "need at least 2 lifted levels");
  for (const auto& r : domain_box) {
    if (!(r.width() > 0.0) || !std::isfinite(r.width())) {
      throw Error(ErrorCode::InvalidConfig, "domain box has an empty axis");
    }
  }
  if (!(value_range.width() > 0.0) || !std::isfinite(value_range.width())) {
    throw Error(ErrorCode::InvalidConfig, "value range is empty");
  }
}

std::size_t GridSpec::spatial_cells() const noexcept {
  std::size_t total = 1;
  for (std::size_t n : n_cells) total *= n;
  return total;
}

std::size_t GridSpec::max_cells() const noexcept {
  return n_cells.empty() ? 0 : *std::max_element(n_cells.begin(), n_cells.end());
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (std::size_t j = 0; j < dim; ++j) v *= cell_width(j);
  return v;
}

double GridSpec::domain_volume() const {
  double v = 1.0;
  for (const auto& r : domain_box) v *= r.width();
  return v;
}

std::size_t GridSpec::spatial_stride(std::size_t axis) const {
  std::size_t s = 1;
  for (std::size_t j = 0; j < axis; ++j) s *= n_cells[j];
  return s;
}

std::vector<std::size_t> GridSpec::unravel(std::size_t cell) const {
  std::vector<std::size_t> idx(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    idx[j] = cell % n_cells[j];
    cell /= n_cells[j];
  }
  return idx;
}

std::size_t GridSpec::cell_of(std::span<const double> x) const {
  std::size_t cell = 0;
  std::size_t stride = 1;
  for (std::size_t j = 0; j < dim; ++j) {
    const double rel = (x[j] - domain_box[j].lo) / domain_box[j].width();
    const auto n = static_cast<double>(n_cells[j]);
    const double k = std::clamp(std::floor(rel * n), 0.0, n - 1.0);
    cell += static_cast<std::size_t>(k) * stride;
    stride *= n_cells[j];
  }
  return cell;
}

std::vector<double> GridSpec::cell_center(std::size_t cell) const {
  std::vector<double> c(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    const std::size_t k = cell % n_cells[j];
    cell /= n_cells[j];
    c[j] = domain_box[j].lo + (static_cast<double>(k) + 0.5) * cell_width(j);
  }
  return c;
}

bool GridSpec::same_shape(const GridSpec& other) const {
  return dim == other.dim && n_cells == other.n_cells && s_levels == other.s_levels;
}

namespace {

Range padded(double lo, double hi, double padding) {
  const double extent = hi - lo;
  double pad = padding * extent;
  if (!(extent > 0.0)) pad = padding > 0.0 ? padding : 0.5;
  return {lo - pad, hi + pad};
}

}  // namespace

GridSpec make_grid(const PointCloud& cloud, std::span<const std::size_t> n_cells,
                   std::size_t s_levels, double padding) {
  return make_grid(cloud, n_cells, s_levels, padding, padding);
}

GridSpec make_grid(const PointCloud& cloud, std::span<const std::size_t> n_cells,
                   std::size_t s_levels, double domain_padding, double value_padding) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "cannot build a grid over no points");
  if (n_cells.size() != cloud.dim()) {
    throw Error(ErrorCode::GridMismatch, "cell counts do not match the point dimension");
  }
  if (!std::isfinite(domain_padding) || domain_padding < 0.0) {
    throw Error(ErrorCode::InvalidConfig, "padding must be a nonnegative fraction");
  }
  std::vector<Range> box(cloud.dim());
  for (std::size_t j = 0; j < box.size(); ++j) {
    double lo = cloud.point(0)[j];
    double hi = lo;
    for (std::size_t i = 1; i < cloud.size(); ++i) {
      lo = std::min(lo, cloud.point(i)[j]);
      hi = std::max(hi, cloud.point(i)[j]);
    }
    box[j] = padded(lo, hi, domain_padding);
  }
  return make_grid_on_box(cloud, n_cells, s_levels, std::move(box), value_padding);
}

GridSpec make_grid_on_box(const PointCloud& cloud, std::span<const std::size_t> n_cells,
                          std::size_t s_levels, std::vector<Range> domain_box,
                          double value_padding) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "cannot build a grid over no points");
  if (n_cells.size() != cloud.dim() || domain_box.size() != cloud.dim()) {
    throw Error(ErrorCode::GridMismatch, "cell counts do not match the point dimension");
  }
  if (!std::isfinite(value_padding) || value_padding < 0.0) {
    throw Error(ErrorCode::InvalidConfig, "padding must be a nonnegative fraction");
  }
  GridSpec g;
  g.dim = cloud.dim();
  g.n_cells.assign(n_cells.begin(), n_cells.end());
  g.s_levels = s_levels;
  g.domain_box = std::move(domain_box);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::size_t j = 0; j < g.dim; ++j) {
      const double x = cloud.point(i)[j];
      if (x < g.domain_box[j].lo || x > g.domain_box[j].hi) {
        throw Error(ErrorCode::GridMismatch, "domain box does not cover the cloud");
      }
    }
  }
  const auto [ylo, yhi] = std::minmax_element(cloud.responses().begin(), cloud.responses().end());
  g.value_range = padded(*ylo, *yhi, value_padding);
  g.validate();
  return g;
}

std::size_t BinnedData::total_count() const {
  return std::accumulate(count.begin(), count.end(), std::size_t{0});
}

namespace {

void check_coverage(const PointCloud& cloud, const GridSpec& grid) {
  if (cloud.dim() != grid.dim) {
    throw Error(ErrorCode::GridMismatch, "point dimension does not match the grid");
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    auto p = cloud.point(i);
    for (std::size_t j = 0; j < grid.dim; ++j) {
      const auto& r = grid.domain_box[j];
      const double tol = 1e-9 * r.width();
      if (p[j] < r.lo - tol || p[j] > r.hi + tol) {
        throw Error(ErrorCode::GridMismatch, "point outside the grid domain box");
      }
    }
  }
}

// Linear-interpolation sample quantile.
double sample_quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace

void fill_empty_cells(std::vector<double>& values, const std::vector<bool>& empty,
                      const GridSpec& grid) {
  const std::size_t m = grid.spatial_cells();
  if (values.size() != m || empty.size() != m) {
    throw Error(ErrorCode::ShapeMismatch, "cell arrays do not match the grid");
  }
  std::vector<bool> known(m);
  std::size_t missing = 0;
  for (std::size_t c = 0; c < m; ++c) {
    known[c] = !empty[c];
    if (empty[c]) ++missing;
  }
  if (missing == m) throw Error(ErrorCode::EmptyCloud, "no nonempty cell to fill from");

  std::vector<std::size_t> strides(grid.dim);
  for (std::size_t j = 0; j < grid.dim; ++j) strides[j] = grid.spatial_stride(j);

  std::vector<std::pair<std::size_t, double>> updates;
  while (missing > 0) {
    updates.clear();
    for (std::size_t c = 0; c < m; ++c) {
      if (known[c]) continue;
      double sum = 0.0;
      int n = 0;
      for (std::size_t j = 0; j < grid.dim; ++j) {
        const std::size_t k = (c / strides[j]) % grid.n_cells[j];
        if (k > 0 && known[c - strides[j]]) {
          sum += values[c - strides[j]];
          ++n;
        }
        if (k + 1 < grid.n_cells[j] && known[c + strides[j]]) {
          sum += values[c + strides[j]];
          ++n;
        }
      }
      if (n > 0) updates.emplace_back(c, sum / n);
    }
    for (const auto& [c, v] : updates) {
      values[c] = v;
      known[c] = true;
    }
    missing -= updates.size();
  }
}

std::vector<double> estimate_density(const PointCloud& cloud, const GridSpec& grid,
                                     DensityMode mode) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "density of an empty cloud");
  const std::size_t m = grid.spatial_cells();
  if (mode == DensityMode::Uniform) return std::vector<double>(m, 1.0 / grid.domain_volume());
  check_coverage(cloud, grid);
  std::vector<double> density(m, 0.0);
  for (std::size_t i = 0; i < cloud.size(); ++i) density[grid.cell_of(cloud.point(i))] += 1.0;
  const double scale = 1.0 / (static_cast<double>(cloud.size()) * grid.cell_volume());
  for (double& d : density) d *= scale;
  return density;
}

double density_floor(const GridSpec& grid) { return 1e-6 / grid.domain_volume(); }

BinnedData bin_points(const PointCloud& cloud, const GridSpec& grid, WeightMode,
                      std::optional<double> winsor_q, DensityMode density) {
  grid.validate();
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "cannot bin an empty cloud");
  check_coverage(cloud, grid);

  double clip = std::numeric_limits<double>::infinity();
  if (winsor_q) {
    if (!(*winsor_q > 0.0 && *winsor_q <= 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "winsorization quantile must lie in (0, 1]");
    }
    clip = sample_quantile(cloud.responses(), *winsor_q);
  }

  const std::size_t m = grid.spatial_cells();
  BinnedData out;
  out.f_hat.assign(m, 0.0);
  out.count.assign(m, 0);
  std::vector<std::size_t> cell_of_point(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    cell_of_point[i] = grid.cell_of(cloud.point(i));
    ++out.count[cell_of_point[i]];
  }
  // Bucket responses per cell and sum each bucket in sorted order so the
  // means are bit-identical under any permutation of the input.
  std::vector<std::size_t> offset(m + 1, 0);
  for (std::size_t c = 0; c < m; ++c) offset[c + 1] = offset[c] + out.count[c];
  std::vector<double> bucket(cloud.size());
  std::vector<std::size_t> fill = offset;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    bucket[fill[cell_of_point[i]]++] = std::min(cloud.response(i), clip);
  }
  out.empty_mask.assign(m, false);
  for (std::size_t c = 0; c < m; ++c) {
    if (out.count[c] == 0) {
      out.empty_mask[c] = true;
      continue;
    }
    auto first = bucket.begin() + static_cast<std::ptrdiff_t>(offset[c]);
    auto last = bucket.begin() + static_cast<std::ptrdiff_t>(offset[c + 1]);
    std::sort(first, last);
    out.f_hat[c] = std::accumulate(first, last, 0.0) / static_cast<double>(out.count[c]);
  }
  fill_empty_cells(out.f_hat, out.empty_mask, grid);
  out.fx_hat = estimate_density(cloud, grid, density);
  return out;
}

}  // namespace fdr
