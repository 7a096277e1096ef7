#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fdr/error.hpp"
#include "fdr/grid.hpp"
#include "helpers.hpp"

using namespace fdr;

TEST_CASE("point cloud rejects bad input") {
  CHECK_THROWS_AS(PointCloud(1, {0.0, 1.0}, {0.0}), Error);
  try {
    PointCloud(1, {0.0, std::nan("")}, {0.0, 1.0});
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteInput);
  }
  try {
    make_grid(PointCloud(), std::vector<std::size_t>{4}, 8);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyCloud);
  }
}

TEST_CASE("make_grid shapes and padding") {
  auto cloud = test::cloud_1d(5000, [](double x) { return x; });
  const std::vector<std::size_t> cells{250};
  const GridSpec g = make_grid(cloud, cells, 32);
  CHECK(g.spatial_cells() == 250);
  CHECK(g.lifted_cells() == 250 * 32);

  PointCloud flat(1, {0.5, 0.5, 0.5}, {1.0, 2.0, 3.0});
  const GridSpec gf = make_grid(flat, cells, 8, 0.05);
  CHECK(gf.domain_box[0].lo == doctest::Approx(0.45));
  CHECK(gf.domain_box[0].hi == doctest::Approx(0.55));
  CHECK(gf.value_range.lo == doctest::Approx(0.9));
  CHECK(gf.value_range.hi == doctest::Approx(3.1));
}

TEST_CASE("corner points land in distinct cells") {
  PointCloud corners(2, {0, 0, 1, 0, 0, 1, 1, 1}, {0, 1, 2, 3});
  const std::vector<std::size_t> cells{2, 2};
  const GridSpec g = make_grid(corners, cells, 4, 0.0);
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < 4; ++i) ids.push_back(g.cell_of(corners.point(i)));
  std::sort(ids.begin(), ids.end());
  CHECK(std::unique(ids.begin(), ids.end()) == ids.end());
}

TEST_CASE("make_grid_on_box requires coverage") {
  PointCloud c(1, {0.2, 1.5}, {0.0, 1.0});
  const std::vector<std::size_t> cells{4};
  CHECK_THROWS_AS(make_grid_on_box(c, cells, 8, {{0.0, 1.0}}), Error);
}

TEST_CASE("binning means, counts and empty flags") {
  PointCloud c(1, {0.1, 0.15, 0.9}, {1.0, 3.0, 5.0});
  const GridSpec g = test::unit_grid({2}, 4, {0.0, 6.0});
  const BinnedData b = bin_points(c, g);
  CHECK(b.f_hat[0] == doctest::Approx(2.0));
  CHECK(b.f_hat[1] == doctest::Approx(5.0));
  CHECK(b.total_count() == 3);
  CHECK_FALSE(b.empty_mask[0]);
  CHECK_FALSE(b.empty_mask[1]);
}

TEST_CASE("checkerboard fill averages face neighbours") {
  const GridSpec g = test::unit_grid({3, 3}, 4);
  std::vector<double> v(9, -99.0);
  std::vector<bool> empty(9, true);
  const auto set = [&](std::size_t i, std::size_t j, double x) {
    v[j * 3 + i] = x;
    empty[j * 3 + i] = false;
  };
  set(0, 0, 0.0);
  set(2, 0, 4.0);
  set(1, 1, 2.0);
  set(0, 2, 4.0);
  set(2, 2, 0.0);
  fill_empty_cells(v, empty, g);
  for (std::size_t c : {1u, 3u, 5u, 7u}) CHECK(v[c] == doctest::Approx(2.0));
  CHECK(v[0] == 0.0);
}

TEST_CASE("iterated fill reaches isolated regions") {
  const GridSpec g = test::unit_grid({5}, 4);
  std::vector<double> v{1.0, 0.0, 0.0, 0.0, 0.0};
  std::vector<bool> empty{false, true, true, true, true};
  fill_empty_cells(v, empty, g);
  for (double x : v) CHECK(x == doctest::Approx(1.0));
}

TEST_CASE("density estimates") {
  const GridSpec g = test::unit_grid({2, 2}, 4);
  std::vector<double> x;
  std::vector<double> y;
  for (int i = 0; i < 100; ++i) {
    x.push_back(0.1 + 0.003 * i);
    x.push_back(0.2);
    y.push_back(1.0);
  }
  PointCloud c(2, x, y);
  const auto hist = estimate_density(c, g, DensityMode::Histogram);
  CHECK(hist[0] == doctest::Approx(4.0));
  CHECK(hist[1] == 0.0);
  const auto unif = estimate_density(c, g, DensityMode::Uniform);
  for (double d : unif) CHECK(d == doctest::Approx(1.0));

  std::mt19937_64 rng(3);
  auto xs = test::random_vector(2 * 500, rng, 0.0, 1.0);
  PointCloud r(2, xs, std::vector<double>(500, 0.0));
  const GridSpec g3 = test::unit_grid({3, 5}, 4);
  const auto h = estimate_density(r, g3, DensityMode::Histogram);
  const double total = std::accumulate(h.begin(), h.end(), 0.0) * g3.cell_volume();
  CHECK(std::abs(total - 1.0) < 1e-8);
  for (double d : h) CHECK(d >= 0.0);
}

TEST_CASE("binning is permutation invariant and winsor q=1 is the identity") {
  std::mt19937_64 rng(5);
  const std::size_t n = 400;
  auto xs = test::random_vector(2 * n, rng, 0.0, 1.0);
  auto ys = test::random_vector(n, rng);
  PointCloud c(2, xs, ys);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  PointCloud shuffled = c.subset(perm);
  const GridSpec g = test::unit_grid({4, 4}, 8, {-1.0, 1.0});
  const BinnedData a = bin_points(c, g);
  const BinnedData b = bin_points(shuffled, g);
  for (std::size_t k = 0; k < a.f_hat.size(); ++k) {
    CHECK(a.f_hat[k] == doctest::Approx(b.f_hat[k]).epsilon(1e-12));
    CHECK(a.count[k] == b.count[k]);
  }
  const BinnedData w = bin_points(c, g, WeightMode::Uniform, 1.0);
  for (std::size_t k = 0; k < a.f_hat.size(); ++k) CHECK(w.f_hat[k] == a.f_hat[k]);
  const BinnedData w90 = bin_points(c, g, WeightMode::Uniform, 0.9);
  const double q90 = [&] {
    auto s = ys;
    std::sort(s.begin(), s.end());
    return s.back();
  }();
  for (double f : w90.f_hat) CHECK(f <= q90);
}

TEST_CASE("cell means approach the regression function as points per cell grow") {
  const auto f = [](double x) { return std::sin(3.0 * x); };
  const GridSpec g = test::unit_grid({10}, 8, {-1.5, 1.5});
  double err[2];
  int idx = 0;
  for (std::size_t n : {200u, 20000u}) {
    std::mt19937_64 rng(9);
    auto xs = test::random_vector(n, rng, 0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 0.1);
    std::vector<double> ys(n);
    std::vector<double> mean_x(10, 0.0);
    std::vector<double> cnt(10, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      ys[i] = f(xs[i]) + noise(rng);
      const std::size_t c = std::min<std::size_t>(static_cast<std::size_t>(xs[i] * 10), 9);
      mean_x[c] += xs[i];
      cnt[c] += 1.0;
    }
    const BinnedData b = bin_points(PointCloud(1, xs, ys), g);
    double worst = 0.0;
    for (std::size_t c = 0; c < 10; ++c) {
      worst = std::max(worst, std::abs(b.f_hat[c] - f(mean_x[c] / cnt[c])));
    }
    err[idx++] = worst;
  }
  CHECK(err[1] < err[0]);
}
