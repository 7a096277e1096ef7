#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "fdr/error.hpp"
#include "fdr/sure.hpp"
#include "helpers.hpp"

using namespace fdr;

TEST_CASE("identity estimator gives sigma^2") {
  std::mt19937_64 rng(1);
  const auto y = test::random_vector(50, rng);
  const std::vector<double> s2(50, 0.04);
  const std::vector<bool> obs(50, true);
  const CellEstimator identity = [](const std::vector<double>& v) { return v; };
  for (std::uint64_t seed : {0u, 1u, 7u}) {
    CHECK(sure_value(y, s2, obs, 0.01, 3, seed, identity) == doctest::Approx(0.04).epsilon(1e-12));
  }
}

TEST_CASE("constant estimator has zero divergence") {
  std::mt19937_64 rng(2);
  const auto y = test::random_vector(40, rng);
  const std::vector<double> s2(40, 0.01);
  const std::vector<bool> obs(40, true);
  const CellEstimator constant = [](const std::vector<double>& v) {
    return std::vector<double>(v.size(), 0.25);
  };
  double want = 0.0;
  for (double v : y) want += (v - 0.25) * (v - 0.25);
  want = want / 40.0 - 0.01;
  CHECK(sure_value(y, s2, obs, 0.01, 3, 5, constant) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("unobserved cells are skipped") {
  const std::vector<double> y{1.0, 2.0, 100.0};
  const std::vector<double> s2(3, 0.5);
  const std::vector<bool> obs{true, true, false};
  const CellEstimator identity = [](const std::vector<double>& v) { return v; };
  CHECK(sure_value(y, s2, obs, 0.01, 2, 0, identity) == doctest::Approx(0.5));
}

TEST_CASE("sample_axis") {
  const auto a = sample_axis({1.0, 500.0}, 20, false, 3, 0);
  CHECK(a.size() == 20);
  CHECK(std::is_sorted(a.begin(), a.end()));
  for (double x : a) CHECK((x >= 1.0 && x <= 500.0));
  CHECK(sample_axis({1.0, 500.0}, 20, false, 3, 0) == a);
  CHECK(sample_axis({1.0, 500.0}, 20, false, 3, 1) != a);
  const auto l = sample_axis({1e-4, 1.0}, 200, true, 3, 0);
  const auto below = std::count_if(l.begin(), l.end(), [](double x) { return x < 1e-2; });
  CHECK(below > 70);
  CHECK(sample_axis({2.0, 2.0}, 4, false, 0, 0) == std::vector<double>{2.0});
}

TEST_CASE("sigma estimate on a known noise level") {
  const PointCloud cloud = test::cloud_1d(20000, [](double) { return 1.0; }, 0.2, 4);
  const GridSpec g = make_grid(cloud, std::vector<std::size_t>{10}, 8);
  CHECK(estimate_sigma(cloud, g) == doctest::Approx(0.2).epsilon(0.03));
}

TEST_CASE("search over one candidate returns it; argmin of the table") {
  const PointCloud cloud = test::cloud_1d(400, [](double x) { return x < 0.5 ? 0.2 : 0.8; }, 0.05);
  const GridSpec g = make_grid(cloud, std::vector<std::size_t>{20}, 16);
  EstimatorSettings st;
  st.solver.tol = 1e-3;
  st.solver.max_iter = 5000;
  SureConfig cfg;
  cfg.sigma = 0.05;
  cfg.lambda_range = {50.0, 50.0};
  cfg.nu_range = {0.01, 0.01};
  cfg.n_lambda = 1;
  cfg.n_nu = 1;
  const SureResult one = sure_search(cloud, g, st, cfg);
  CHECK(one.lambda == 50.0);
  CHECK(one.nu == 0.01);
  CHECK(one.table.size() == 1);

  cfg.lambda_range = {5.0, 300.0};
  cfg.nu_range = {1e-3, 0.05};
  cfg.n_lambda = 3;
  cfg.n_nu = 2;
  const SureResult r = sure_search(cloud, g, st, cfg);
  REQUIRE(r.table.size() == 6);
  const auto best = std::min_element(r.table.begin(), r.table.end(),
                                     [](const SureRow& a, const SureRow& b) { return a.eta < b.eta; });
  CHECK(r.eta == best->eta);
  CHECK(r.lambda == best->lambda);
  CHECK(r.nu == best->nu);
  CHECK(sure_search(cloud, g, st, cfg, 3).table.size() == 6);
}

TEST_CASE("all failed candidates raise") {
  const PointCloud cloud = test::cloud_1d(200, [](double x) { return x; }, 0.05);
  const GridSpec g = make_grid(cloud, std::vector<std::size_t>{10}, 8);
  EstimatorSettings st;
  st.solver.max_iter = 1;
  SureConfig cfg;
  cfg.sigma = 0.05;
  cfg.n_lambda = 2;
  cfg.n_nu = 1;
  try {
    sure_search(cloud, g, st, cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AllCandidatesFailed);
  }
}

TEST_CASE("config validation") {
  SureConfig c;
  c.delta = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SureConfig{};
  c.lambda_range = {5.0, 1.0};
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK_NOTHROW(SureConfig{}.validate());
}
