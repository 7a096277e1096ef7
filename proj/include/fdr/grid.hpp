#pragma once

// Regular lattice over X x R and the binned per-cell estimates the solver
// consumes.
//
// Spatial cells are indexed linearly with axis 0 fastest. Lifted fields
// (one value per spatial cell and level) store the level index fastest, so
// the column of a single spatial cell is contiguous.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace fdr {

class PointCloud {
 public:
  PointCloud() = default;
  // `x` is row-major, n rows of `dim` coordinates. Throws on non-finite
  // values or a size mismatch.
  PointCloud(std::size_t dim, std::vector<double> x, std::vector<double> y);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return y_.size(); }
  bool empty() const noexcept { return y_.empty(); }

  std::span<const double> point(std::size_t i) const {
    return {x_.data() + i * dim_, dim_};
  }
  double response(std::size_t i) const { return y_[i]; }
  const std::vector<double>& coords() const noexcept { return x_; }
  const std::vector<double>& responses() const noexcept { return y_; }

  PointCloud subset(std::span<const std::size_t> rows) const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> x_;
  std::vector<double> y_;
};

struct Range {
  double lo = 0.0;
  double hi = 1.0;
  double width() const noexcept { return hi - lo; }
};

struct GridSpec {
  std::size_t dim = 0;
  std::vector<std::size_t> n_cells;
  std::size_t s_levels = 0;
  std::vector<Range> domain_box;
  Range value_range;

  void validate() const;

  std::size_t spatial_cells() const noexcept;
  std::size_t lifted_cells() const noexcept { return spatial_cells() * s_levels; }
  std::size_t max_cells() const noexcept;

  double cell_width(std::size_t axis) const {
    return domain_box[axis].width() / static_cast<double>(n_cells[axis]);
  }
  double cell_volume() const;
  double domain_volume() const;

  // Stride of `axis` in the spatial linear index.
  std::size_t spatial_stride(std::size_t axis) const;
  std::vector<std::size_t> unravel(std::size_t cell) const;
  std::size_t cell_of(std::span<const double> x) const;
  std::vector<double> cell_center(std::size_t cell) const;

  // Map responses to and from the unit lifted axis.
  double to_unit_value(double y) const { return (y - value_range.lo) / value_range.width(); }
  double from_unit_value(double t) const { return value_range.lo + t * value_range.width(); }

  bool same_shape(const GridSpec& other) const;
};

// Tight bounding box of the cloud expanded by `padding` (a fraction of the
// extent, or an absolute half-width when the extent is zero) per side.
GridSpec make_grid(const PointCloud& cloud, std::span<const std::size_t> n_cells,
                   std::size_t s_levels, double padding = 0.05);
GridSpec make_grid(const PointCloud& cloud, std::span<const std::size_t> n_cells,
                   std::size_t s_levels, double domain_padding, double value_padding);
// Fixed domain box (must cover the cloud); only the value range is fitted.
GridSpec make_grid_on_box(const PointCloud& cloud, std::span<const std::size_t> n_cells,
                          std::size_t s_levels, std::vector<Range> domain_box,
                          double value_padding = 0.05);

enum class WeightMode { Uniform };
enum class DensityMode { Histogram, Uniform };

struct BinnedData {
  std::vector<double> f_hat;
  std::vector<double> fx_hat;
  std::vector<std::size_t> count;
  std::vector<bool> empty_mask;

  std::size_t total_count() const;
};

// Per-cell response means (optionally winsorized at the `winsor_q` sample
// quantile), empty cells filled from face neighbours, and a density
// estimate in `density` mode.
BinnedData bin_points(const PointCloud& cloud, const GridSpec& grid,
                      WeightMode weights = WeightMode::Uniform,
                      std::optional<double> winsor_q = std::nullopt,
                      DensityMode density = DensityMode::Histogram);

// Fills cells flagged in `empty` with the mean of their non-empty face
// neighbours, sweeping until every cell holds a value. Values of flagged
// cells on input are ignored.
void fill_empty_cells(std::vector<double>& values, const std::vector<bool>& empty,
                      const GridSpec& grid);

std::vector<double> estimate_density(const PointCloud& cloud, const GridSpec& grid,
                                     DensityMode mode);

// Lower bound applied to density estimates before they enter the
// constraint set, in original units.
double density_floor(const GridSpec& grid);

}  // namespace fdr
