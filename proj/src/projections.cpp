#include "fdr/projections.hpp"

#include <algorithm>
#include <cmath>

#include "fdr/error.hpp"

namespace fdr {

void project_C_inplace(std::span<double> v, const GridSpec& grid) {
  const std::size_t s = grid.s_levels;
  if (v.size() != grid.lifted_cells()) {
    throw Error(ErrorCode::ShapeMismatch, "primal field does not match the grid");
  }
  for (std::size_t base = 0; base < v.size(); base += s) {
    v[base] = 1.0;
    for (std::size_t l = 1; l + 1 < s; ++l) v[base + l] = std::clamp(v[base + l], 0.0, 1.0);
    v[base + s - 1] = 0.0;
  }
}

PrimalField project_C(PrimalField v, const GridSpec& grid) {
  project_C_inplace(v.values, grid);
  return v;
}

ParabolaSpec ParabolaSpec::from_cell(double density, double lambda, double level,
                                     double response) {
  const double gap = level - response;
  return {1.0 / (4.0 * density), lambda * density * gap * gap};
}

double parabola_cubic_root(double a, double b) {
  // Discriminant written as a product when b < 0 to avoid cancellation.
  double d;
  if (b >= 0.0) {
    d = a * a + b * b * b;
  } else {
    const double r3 = std::pow(std::sqrt(-b), 3);
    d = (a - r3) * (a + r3);
  }
  if (d >= 0.0) {
    const double c = std::cbrt(a + std::sqrt(d));
    if (std::abs(c) < 1e-14) return 0.0;
    // Cardano root c - b / c, rewritten as 2a / (c^2 + b + b^2 / c^2) so a
    // small a does not cancel against b.
    const double c2 = c * c;
    return 2.0 * a / (c2 + b + b * b / c2);
  }
  const double sb = std::sqrt(-b);
  const double arg = std::clamp(a / (sb * sb * sb), -1.0, 1.0);
  return 2.0 * sb * std::cos(std::acos(arg) / 3.0);
}

void project_parabola(std::span<double> p, const ParabolaSpec& spec) {
  if (!(spec.alpha > 0.0)) {
    throw Error(ErrorCode::NonpositiveCurvature, "parabola curvature must be positive");
  }
  const std::size_t d = p.size() - 1;
  const double alpha = spec.alpha;
  const double pt = p[d] + spec.offset;
  double norm_sq = 0.0;
  for (std::size_t j = 0; j < d; ++j) norm_sq += p[j] * p[j];
  if (pt >= alpha * norm_sq) return;

  const double norm = std::sqrt(norm_sq);
  if (norm > 0.0) {
    // With t = 2 alpha |p_x| the optimality conditions reduce to
    // t^3 + 3 b t - 2 a = 0.
    const double a = 2.0 * alpha * norm;
    const double b = (2.0 / 3.0) * (1.0 - 2.0 * alpha * pt);
    const double w = parabola_cubic_root(a, b);
    const double scale = w / (2.0 * alpha * norm);
    norm_sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      p[j] *= scale;
      norm_sq += p[j] * p[j];
    }
  } else {
    norm_sq = 0.0;
  }
  p[d] = alpha * norm_sq - spec.offset;
}

void project_ball(std::span<double> s, double nu) {
  double norm_sq = 0.0;
  for (double x : s) norm_sq += x * x;
  if (norm_sq <= nu * nu) return;
  const double scale = nu / std::sqrt(norm_sq);
  for (double& x : s) x *= scale;
}

}  // namespace fdr
