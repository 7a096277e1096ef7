#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fdr/calculus.hpp"
#include "fdr/error.hpp"
#include "helpers.hpp"

using namespace fdr;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("adjoint identity on random fields in 1-3 dimensions") {
  std::mt19937_64 rng(11);
  const std::vector<std::vector<std::size_t>> shapes{{7}, {3, 3}, {4, 3, 2}};
  for (const auto& cells : shapes) {
    const GridSpec g = test::unit_grid(cells, 4);
    for (int rep = 0; rep < 100; ++rep) {
      PrimalField v(g);
      v.values = test::random_vector(g.lifted_cells(), rng);
      DualField p(g);
      p.data = test::random_vector(p.data.size(), rng);
      const double lhs = dot(grad_forward(v, g).data, p.data);
      const double rhs = dot(v.values, divergence_adjoint(p, g).values);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST_CASE("forward differences: constants, boundary and scaling") {
  const GridSpec g = test::unit_grid({3, 2}, 5);
  PrimalField c(g, 0.7);
  for (double x : grad_forward(c, g).data) CHECK(x == 0.0);

  // Lifted column (1, 2/3, 1/3, 0) with S = 4.
  const GridSpec g1 = test::unit_grid({2}, 4);
  PrimalField v(g1);
  for (std::size_t k = 0; k < 2; ++k) {
    v[k * 4 + 0] = 1.0;
    v[k * 4 + 1] = 2.0 / 3.0;
    v[k * 4 + 2] = 1.0 / 3.0;
    v[k * 4 + 3] = 0.0;
  }
  const DualField d = grad_forward(v, g1);
  const auto t = d.component(1);
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t l = 0; l < 3; ++l) CHECK(t[k * 4 + l] == doctest::Approx(-4.0 / 3.0));
    CHECK(t[k * 4 + 3] == 0.0);
  }
  for (double x : d.component(0)) CHECK(x == 0.0);
}

TEST_CASE("half-space indicator has one nonzero layer of magnitude N") {
  const GridSpec g = test::unit_grid({6, 4}, 3);
  PrimalField v(g);
  for (std::size_t c = 0; c < g.spatial_cells(); ++c) {
    const bool left = (c % 6) < 3;
    for (std::size_t l = 0; l < 3; ++l) v[c * 3 + l] = left ? 1.0 : 0.0;
  }
  const DualField d = grad_forward(v, g);
  std::size_t nonzero = 0;
  for (std::size_t c = 0; c < g.spatial_cells(); ++c) {
    for (std::size_t l = 0; l < 3; ++l) {
      const double x = d.component(0)[c * 3 + l];
      if (x != 0.0) {
        ++nonzero;
        CHECK(c % 6 == 2);
        CHECK(x == doctest::Approx(-6.0));
      }
    }
  }
  CHECK(nonzero == 4 * 3);
}

TEST_CASE("field constant along an axis has zero component there") {
  std::mt19937_64 rng(2);
  const GridSpec g = test::unit_grid({4, 3}, 3);
  PrimalField v(g);
  const auto row = test::random_vector(3 * 3, rng);
  for (std::size_t c = 0; c < g.spatial_cells(); ++c) {
    for (std::size_t l = 0; l < 3; ++l) v[c * 3 + l] = row[(c / 4) * 3 + l];
  }
  const DualField d = grad_forward(v, g);
  for (double x : d.component(0)) CHECK(x == 0.0);
}

TEST_CASE("adjoint of a field constant along a length-3 axis") {
  const GridSpec g = test::unit_grid({3}, 2);
  DualField p(g);
  for (double& x : p.component(0)) x = 1.0;
  zero_outflow(p, g);
  const PrimalField a = divergence_adjoint(p, g);
  // Backward differences of (1, 1, 0) scaled by N = 3: -1, 0, +1.
  CHECK(a[0] == doctest::Approx(-3.0));
  CHECK(a[2] == doctest::Approx(0.0));
  CHECK(a[4] == doctest::Approx(3.0));
}

TEST_CASE("operator norm bound") {
  const std::vector<std::vector<std::size_t>> shapes{{12}, {6, 5}, {4, 3, 3}};
  for (const auto& cells : shapes) {
    const GridSpec g = test::unit_grid(cells, 8);
    std::size_t biggest = g.s_levels;
    for (std::size_t n : cells) biggest = std::max(biggest, n);
    const double bound = 4.0 * static_cast<double>(g.dim + 1) * static_cast<double>(biggest * biggest);
    CHECK(estimate_operator_norm_sq(g, 300) <= bound);
  }
}

TEST_CASE("pairing properties") {
  std::mt19937_64 rng(4);
  const GridSpec g = test::unit_grid({3, 3}, 4);
  DualField p(g);
  p.data = test::random_vector(p.data.size(), rng);
  CHECK(pairing(p, PrimalField(g, 0.3), g) == 0.0);
  PrimalField v(g);
  v.values = test::random_vector(v.size(), rng);
  DualField p2 = p;
  for (double& x : p2.data) x *= 2.5;
  CHECK(pairing(p2, v, g) == doctest::Approx(2.5 * pairing(p, v, g)));
  CHECK(pairing(p, v, g, true) ==
        doctest::Approx(pairing(p, v, g) / static_cast<double>(g.lifted_cells())));

  // Binary step with p = 1 on the jump faces.
  const GridSpec g1 = test::unit_grid({4}, 2);
  PrimalField step(g1);
  for (std::size_t c = 0; c < 4; ++c) step[c * 2] = c < 2 ? 1.0 : 0.0;
  DualField ones(g1);
  ones.component(0)[1 * 2] = 1.0;
  CHECK(pairing(ones, step, g1) == doctest::Approx(-4.0));
}

TEST_CASE("shape mismatch is reported") {
  const GridSpec g = test::unit_grid({3}, 4);
  PrimalField wrong;
  wrong.values.assign(5, 0.0);
  CHECK_THROWS_AS(grad_forward(wrong, g), Error);
  DualField bad(2, 7);
  CHECK_THROWS_AS(divergence_adjoint(bad, g), Error);
}
