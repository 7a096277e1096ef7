#include <doctest.h>

#include <cmath>
#include <random>

#include "fdr/error.hpp"
#include "fdr/projections.hpp"
#include "helpers.hpp"

using namespace fdr;

namespace {

double dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::vector<double> proj_parabola(std::vector<double> p, const ParabolaSpec& s) {
  project_parabola(p, s);
  return p;
}

// Nearest point on {p_t = alpha |p_x|^2 - offset} by dense search over the
// radius along the direction of p_x (the minimizer keeps that direction),
// refined by golden-section search.
std::vector<double> brute_force(const std::vector<double>& p0, const ParabolaSpec& s) {
  const std::size_t d = p0.size() - 1;
  double r0 = 0.0;
  for (std::size_t j = 0; j < d; ++j) r0 += p0[j] * p0[j];
  r0 = std::sqrt(r0);
  const double pt = p0[d];
  if (pt >= s.alpha * r0 * r0 - s.offset) return p0;
  const auto sq = [&](double r) {
    const double t = s.alpha * r * r - s.offset;
    return (r - r0) * (r - r0) + (t - pt) * (t - pt);
  };
  const double hi = r0 + std::sqrt(std::abs(pt + s.offset) / s.alpha) + 1.0;
  const int steps = 20000;
  double best = 0.0;
  double best_val = sq(0.0);
  for (int i = 1; i <= steps; ++i) {
    const double r = hi * i / steps;
    if (sq(r) < best_val) {
      best_val = sq(r);
      best = r;
    }
  }
  double a = std::max(0.0, best - hi / steps);
  double b = best + hi / steps;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double c = b - g * (b - a);
    const double e = a + g * (b - a);
    if (sq(c) < sq(e)) {
      b = e;
    } else {
      a = c;
    }
  }
  const double r = 0.5 * (a + b);
  std::vector<double> out(d + 1);
  for (std::size_t j = 0; j < d; ++j) out[j] = r0 > 0.0 ? p0[j] * r / r0 : 0.0;
  out[d] = s.alpha * r * r - s.offset;
  return out;
}

}  // namespace

TEST_CASE("project_C clips and fixes the boundary levels") {
  const GridSpec g = test::unit_grid({2}, 4);
  PrimalField v(g, 0.5);
  v[1] = 1.3;
  v[2] = -0.2;
  const PrimalField p = project_C(v, g);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == 1.0);
  CHECK(p[2] == 0.0);
  CHECK(p[3] == 0.0);
  CHECK(p[5] == 0.5);
  CHECK(project_C(p, g).values == p.values);
}

TEST_CASE("parabola projection examples") {
  CHECK(proj_parabola({0.0, -1.0}, {1.0, 0.0}) == std::vector<double>{0.0, 0.0});
  CHECK(proj_parabola({1.0, 2.0}, {1.0, 0.0}) == std::vector<double>{1.0, 2.0});
  const auto p = proj_parabola({2.0, 0.0}, {1.0, 0.0});
  CHECK(p[1] == doctest::Approx(p[0] * p[0]).epsilon(1e-12));
  const auto ref = brute_force({2.0, 0.0}, {1.0, 0.0});
  CHECK(dist(p, ref) < 1e-4);
  std::vector<double> q{1.0, 0.0};
  CHECK_THROWS_AS(project_parabola(q, {0.0, 0.0}), Error);
}

TEST_CASE("parabola projection is feasible and matches brute force") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> a(0.05, 4.0);
  std::uniform_real_distribution<double> off(0.0, 2.0);
  for (int i = 0; i < 2000; ++i) {
    const std::size_t d = 1 + static_cast<std::size_t>(i % 2);
    std::vector<double> p0(d + 1);
    for (double& x : p0) x = u(rng);
    const ParabolaSpec s{a(rng), off(rng)};
    const auto p = proj_parabola(p0, s);
    double nsq = 0.0;
    for (std::size_t j = 0; j < d; ++j) nsq += p[j] * p[j];
    CHECK(p[d] >= s.alpha * nsq - s.offset - 1e-10);
    CHECK(dist(p, brute_force(p0, s)) < 1e-4);
  }
}

TEST_CASE("projections are idempotent and non-expansive") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> x{u(rng), u(rng), u(rng)};
    std::vector<double> y{u(rng), u(rng), u(rng)};
    const ParabolaSpec s{0.7, 0.3};
    const auto px = proj_parabola(x, s);
    const auto py = proj_parabola(y, s);
    CHECK(dist(proj_parabola(px, s), px) <= 1e-12);
    CHECK(dist(px, py) <= dist(x, y) + 1e-10);

    std::vector<double> bx{x[0], x[1]};
    std::vector<double> by{y[0], y[1]};
    project_ball(bx, 0.8);
    project_ball(by, 0.8);
    auto bb = bx;
    project_ball(bb, 0.8);
    CHECK(dist(bb, bx) <= 1e-12);
    CHECK(dist(bx, by) <= dist({x[0], x[1]}, {y[0], y[1]}) + 1e-10);
  }
}

TEST_CASE("ball projection examples") {
  std::vector<double> s{0.3, 0.4};
  project_ball(s, 1.0);
  CHECK(s == std::vector<double>{0.3, 0.4});
  std::vector<double> t{3.0, 4.0};
  project_ball(t, 1.0);
  CHECK(t[0] == doctest::Approx(0.6));
  CHECK(t[1] == doctest::Approx(0.8));
  std::vector<double> z{0.0, 0.0};
  project_ball(z, 1.0);
  CHECK(z == std::vector<double>{0.0, 0.0});
}

TEST_CASE("cubic root agrees with a bracketing root finder") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> ua(0.0, 5.0);
  std::uniform_real_distribution<double> ub(-3.0, 3.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = ua(rng);
    const double b = ub(rng);
    // Largest real root of t^3 + 3bt - 2a: the polynomial is negative at 0
    // (for a > 0) and positive beyond the bracket.
    const auto f = [&](double t) { return t * t * t + 3.0 * b * t - 2.0 * a; };
    double lo = 0.0;
    double hi = 1.0 + std::abs(3.0 * b) + std::abs(2.0 * a);
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) > 0.0 ? hi : lo) = mid;
    }
    // Among roots >= 0, the projection needs the largest.
    const double w = parabola_cubic_root(a, b);
    CHECK(std::abs(w - 0.5 * (lo + hi)) < 1e-8 * std::max(1.0, std::abs(w)));
  }
}
