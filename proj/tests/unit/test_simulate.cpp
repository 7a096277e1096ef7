#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fdr/error.hpp"
#include "fdr/simulate.hpp"
#include "helpers.hpp"

using namespace fdr;

TEST_CASE("jump sizes from Cohen's d") {
  CHECK(circle_scenario(0.75, 1000, 0).jump_sizes()[0] == doctest::Approx(0.1126).epsilon(1e-3));
  CHECK(sphere_scenario(0.5, 1000, 0).jump_sizes()[0] == doctest::Approx(0.0738).epsilon(1e-3));
  const auto f1 = fig1_scenario(5000, 0).jump_sizes();
  REQUIRE(f1.size() == 4);
  CHECK(f1[3] == doctest::Approx(-0.4220));
}

TEST_CASE("base functions have the configured spread") {
  for (std::size_t dim : {1u, 2u, 3u}) {
    Scenario sc = dim == 1 ? fig1_scenario(20000, 2)
                           : (dim == 2 ? circle_scenario(0.5, 20000, 2) : sphere_scenario(0.5, 20000, 2));
    sc.sigma = 0.0;
    const PointCloud c = sample_cloud(sc);
    double s = 0.0;
    double s2 = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double b = base_value(sc, c.point(i));
      s += b;
      s2 += b * b;
    }
    const double m = s / static_cast<double>(c.size());
    const double sd = std::sqrt(s2 / static_cast<double>(c.size()) - m * m);
    CHECK(sd == doctest::Approx(sc.resolved_base_sd()).epsilon(0.03));
  }
}

TEST_CASE("noise-free clouds reproduce the truth and are seeded") {
  Scenario sc = circle_scenario(0.5, 500, 9);
  sc.sigma = 0.0;
  const PointCloud c = sample_cloud(sc);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(c.response(i) == truth_value(sc, c.point(i)));
  const PointCloud c2 = sample_cloud(sc);
  CHECK(c2.coords() == c.coords());
  sc.seed = 10;
  CHECK(sample_cloud(sc).coords() != c.coords());
}

TEST_CASE("1D truth mask uses half-open cells") {
  Scenario sc;
  sc.dim = 1;
  sc.n = 100;
  sc.step_locations = {0.5, 0.73};
  sc.step_sizes = {0.3, -0.2};
  const GridSpec g = test::unit_grid({10}, 16);
  const Truth t = rasterize_truth(sc, g);
  for (std::size_t i = 0; i < 10; ++i) CHECK(t.jump_mask[i] == (i == 4 || i == 7));
  CHECK(t.jump_size[4] == doctest::Approx(0.3));
  CHECK(t.jump_size[7] == doctest::Approx(-0.2));
}

TEST_CASE("2D truth mask traces the circle") {
  const Scenario sc = circle_scenario(0.5, 1000, 0);
  const GridSpec g = test::unit_grid({20, 20}, 16);
  const Truth t = rasterize_truth(sc, g);
  std::size_t count = 0;
  for (std::size_t c = 0; c < 400; ++c) {
    const auto x = g.cell_center(c);
    const double r = std::hypot(x[0] - 0.5, x[1] - 0.5);
    if (t.jump_mask[c]) {
      ++count;
      CHECK(std::abs(r - 0.25) <= 0.05 * std::sqrt(2.0) / 2.0 + 1e-12);
    } else {
      CHECK(std::abs(r - 0.25) > 0.0);
    }
  }
  CHECK(count > 30);
  CHECK(count < 60);
}

TEST_CASE("Monte Carlo with a perfect stub gives a zero row") {
  ScenarioBlock block;
  block.rows = {circle_scenario(0.5, 300, 0)};
  block.lambda = 10.0;
  block.nu = 0.01;
  MonteCarloConfig cfg;
  cfg.cells_per_axis = 8;
  cfg.s_levels = 8;
  const SampleEstimator perfect = [](const Sample& s, double, double) {
    return FdrEstimate{s.truth.surface, s.truth.jump_mask, s.truth.jump_size,
                       std::vector<double>(s.truth.surface.size(), 0.0)};
  };
  const MonteCarloResult r = run_monte_carlo({block}, 1, cfg, perfect);
  REQUIRE(r.rows.size() == 1);
  const Metrics& m = r.rows[0].metrics;
  CHECK(m.mse_u == 0.0);
  CHECK(m.mse_tau == 0.0);
  CHECK(m.bias_tau == 0.0);
  CHECK(m.fnr == 0.0);
  CHECK(m.fpr == 0.0);
  CHECK(r.rows[0].reps == 1);

  std::ostringstream os;
  write_table_csv(os, r.rows);
  CHECK(os.str().rfind("block,dim,d,n,alpha,alpha_hat,mse,mse_tau,bias_tau,fnr,fpr,", 0) == 0);
}

TEST_CASE("Monte Carlo is deterministic across workers") {
  ScenarioBlock block;
  block.rows = {circle_scenario(0.5, 300, 0)};
  block.lambda = 50.0;
  block.nu = 0.005;
  MonteCarloConfig cfg;
  cfg.cells_per_axis = 6;
  cfg.s_levels = 8;
  cfg.settings.solver.tol = 1e-3;
  cfg.seed = 4;
  const auto a = run_monte_carlo({block}, 3, cfg);
  cfg.workers = 3;
  const auto b = run_monte_carlo({block}, 3, cfg);
  std::ostringstream sa;
  std::ostringstream sb;
  write_table_csv(sa, a.rows);
  write_table_csv(sb, b.rows);
  CHECK(sa.str() == sb.str());
}

TEST_CASE("scenario validation") {
  Scenario sc = circle_scenario(0.5, 100, 0);
  sc.dim = 4;
  CHECK_THROWS_AS(sc.validate(), Error);
  sc = circle_scenario(-1.0, 100, 0);
  CHECK_THROWS_AS(sc.validate(), Error);
}
