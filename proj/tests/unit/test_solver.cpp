#include <doctest.h>

#include <cmath>
#include <random>

#include "fdr/error.hpp"
#include "fdr/estimator.hpp"
#include "fdr/segmentation.hpp"
#include "fdr/solver.hpp"
#include "helpers.hpp"

using namespace fdr;

TEST_CASE("residual examples") {
  const std::vector<double> v{0.2, 0.5, 1.0};
  const std::vector<double> p{0.0, -2.0};
  CHECK(residual(v, v, p, p) == 0.0);
  std::vector<double> v2 = v;
  for (double& x : v2) x += 1e-6;
  CHECK(residual(v, v2, p, p) < 5e-5);
  std::vector<double> p2{0.0, 3.0};
  CHECK(residual(v, v, p, p2) == doctest::Approx(5.0 / 3.0));
  std::vector<double> p3{0.0, std::nan("")};
  CHECK(std::isinf(residual(v, v, p, p3)));
}

TEST_CASE("solver config validation") {
  SolverConfig c;
  c.tol = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SolverConfig{};
  c.max_iter = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SolverConfig{};
  c.lambda = -1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK_NOTHROW(SolverConfig{}.validate());
}

TEST_CASE("constant data gives the subgraph indicator") {
  // 0.5 sits on the face above level 7 when S = 15.
  const GridSpec g = test::unit_grid({6, 6}, 15);
  const BinnedData b = test::binned_from(std::vector<double>(36, 0.5));
  SolverConfig cfg;
  cfg.lambda = 50.0;
  cfg.nu = 0.01;
  cfg.max_iter = 4000;
  const SolveReport r = solve(b, g, cfg);
  CHECK(r.converged);
  for (std::size_t c = 0; c < 36; ++c) {
    for (std::size_t l = 0; l < 15; ++l) {
      const double want = l <= 7 ? 1.0 : 0.0;
      CHECK(std::abs(r.v_star[c * 15 + l] - want) <= 0.01);
    }
  }
  const FdrEstimate e = make_estimate(r.v_star, g, cfg.nu);
  for (bool m : e.jump_mask) CHECK_FALSE(m);
  for (double u : e.u_hat) CHECK(u == doctest::Approx(0.5));
}

TEST_CASE("every iterate is feasible") {
  std::mt19937_64 rng(5);
  for (int prob = 0; prob < 5; ++prob) {
    const GridSpec g = test::unit_grid({5, 4}, 8);
    auto f = test::random_vector(20, rng, 0.1, 0.9);
    SolverConfig cfg;
    cfg.lambda = 20.0 + 40.0 * prob;
    cfg.nu = 0.002 * (prob + 1);
    cfg.max_iter = 150;
    bool ok = true;
    solve(test::binned_from(f), g, cfg, [&](const PrimalDualSolver& s) {
      ok = ok && s.primal_feasible() && s.max_parabola_violation() <= 1e-8 &&
           s.max_aux_excess() <= 1e-8;
    });
    CHECK(ok);
  }
}

TEST_CASE("solves are deterministic and warm starts resume") {
  std::mt19937_64 rng(9);
  const GridSpec g = test::unit_grid({12}, 12);
  const BinnedData b = test::binned_from(test::random_vector(12, rng, 0.0, 1.0));
  SolverConfig cfg;
  cfg.lambda = 80.0;
  cfg.nu = 0.01;
  cfg.max_iter = 3000;
  SolverState end;
  const SolveReport a = solve(b, g, cfg, {}, nullptr, &end);
  const SolveReport a2 = solve(b, g, cfg);
  CHECK(a.v_star.values == a2.v_star.values);
  CHECK(a.iterations == a2.iterations);
  const SolveReport warm = solve(b, g, cfg, {}, &end);
  CHECK(warm.iterations <= cfg.check_every);
  CHECK(warm.converged);
}

TEST_CASE("max_iter reached is reported, not thrown") {
  const GridSpec g = test::unit_grid({8}, 8);
  SolverConfig cfg;
  cfg.max_iter = 1;
  const SolveReport r = solve(test::binned_from(std::vector<double>(8, 0.3)), g, cfg);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 1);
}

TEST_CASE("grid mismatch is rejected") {
  const GridSpec g = test::unit_grid({8}, 8);
  CHECK_THROWS_AS(solve(test::binned_from(std::vector<double>(7, 0.3)), g, SolverConfig{}),
                  Error);
}

TEST_CASE("1D step is recovered at its location") {
  const GridSpec g = test::unit_grid({20}, 32);
  std::vector<double> f(20);
  for (std::size_t i = 0; i < 20; ++i) f[i] = i < 10 ? 0.2 : 0.8;
  SolverConfig cfg;
  cfg.lambda = 200.0;
  cfg.nu = 0.01;
  cfg.max_iter = 20000;
  const SolveReport r = solve(test::binned_from(f), g, cfg);
  const FdrEstimate e = make_estimate(r.v_star, g, cfg.nu);
  std::size_t count = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    if (e.jump_mask[i]) {
      ++count;
      CHECK(i == 9);
      CHECK(e.jump_size[i] == doctest::Approx(0.6).epsilon(0.05));
    }
  }
  CHECK(count == 1);
}

TEST_CASE("random problems stay finite") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> lam(1.0, 500.0);
  std::uniform_real_distribution<double> nu(5e-4, 0.1);
  for (int prob = 0; prob < 20; ++prob) {
    const GridSpec g = test::unit_grid({6, 5}, 8, {-1.0, 2.0});
    auto f = test::random_vector(30, rng, -1.0, 2.0);
    SolverConfig cfg;
    cfg.lambda = lam(rng);
    cfg.nu = nu(rng);
    cfg.max_iter = 200;
    const SolveReport r = solve(test::binned_from(f), g, cfg);
    bool finite = true;
    for (double x : r.v_star.values) finite = finite && std::isfinite(x);
    CHECK(finite);
  }
}
