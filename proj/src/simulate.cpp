#include "fdr/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "fdr/error.hpp"
#include "fdr/parallel.hpp"
#include "fdr/random.hpp"

namespace fdr {

namespace {

constexpr double kCircleRadius = 0.25;
constexpr double kSphereRadius = 0.3;

double default_base_sd(std::size_t dim) {
  switch (dim) {
    case 1:
      return 0.3 / std::numbers::sqrt2;
    case 2:
      return 0.1126 / 0.75;
    default:
      return 0.0738 / 0.5;
  }
}

double distance_to_center(std::span<const double> x) {
  double sq = 0.0;
  for (double v : x) sq += (v - 0.5) * (v - 0.5);
  return std::sqrt(sq);
}

}  // namespace

void Scenario::validate() const {
  if (dim < 1 || dim > 3) throw Error(ErrorCode::InvalidConfig, "scenario dimension must be 1, 2 or 3");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::InvalidConfig, "noise sd must be finite and nonnegative");
  }
  if (n < 1) throw Error(ErrorCode::InvalidConfig, "scenario needs at least one point");
  if (!std::isfinite(cohens_d) || !std::isfinite(base_sd) || base_sd < 0.0) {
    throw Error(ErrorCode::InvalidConfig, "jump scale must be finite");
  }
  if (step_sizes.empty() && !(cohens_d > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "Cohen's d must be positive");
  }
  if (dim == 1) {
    if (step_locations.empty()) throw Error(ErrorCode::InvalidConfig, "1D scenario needs steps");
    for (double t : step_locations) {
      if (!(t > 0.0 && t < 1.0)) throw Error(ErrorCode::InvalidConfig, "steps must lie in (0, 1)");
    }
    if (!step_sizes.empty() && step_sizes.size() != step_locations.size()) {
      throw Error(ErrorCode::InvalidConfig, "one size per step required");
    }
  } else {
    const double r = resolved_radius();
    if (!(r > 0.0 && r < 0.5)) throw Error(ErrorCode::InvalidConfig, "radius must lie in (0, 0.5)");
  }
}

double Scenario::resolved_base_sd() const { return base_sd > 0.0 ? base_sd : default_base_sd(dim); }

double Scenario::resolved_radius() const {
  if (radius > 0.0) return radius;
  return dim == 3 ? kSphereRadius : kCircleRadius;
}

std::vector<double> Scenario::jump_sizes() const {
  const double alpha = cohens_d * resolved_base_sd();
  if (dim != 1) return {alpha};
  if (!step_sizes.empty()) return step_sizes;
  return std::vector<double>(step_locations.size(), alpha);
}

Scenario fig1_scenario(std::size_t n, std::uint64_t seed) {
  Scenario sc;
  sc.dim = 1;
  sc.cohens_d = 0.0;
  sc.n = n;
  sc.seed = seed;
  sc.step_locations = {0.2, 0.4, 0.6, 0.8};
  sc.step_sizes = {0.1286, 0.2133, 0.3192, -0.4220};
  return sc;
}

Scenario circle_scenario(double cohens_d, std::size_t n, std::uint64_t seed) {
  Scenario sc;
  sc.dim = 2;
  sc.cohens_d = cohens_d;
  sc.n = n;
  sc.seed = seed;
  return sc;
}

Scenario sphere_scenario(double cohens_d, std::size_t n, std::uint64_t seed) {
  Scenario sc = circle_scenario(cohens_d, n, seed);
  sc.dim = 3;
  return sc;
}

double base_value(const Scenario& sc, std::span<const double> x) {
  const double s = sc.resolved_base_sd();
  if (sc.dim == 1) return s * std::numbers::sqrt2 * std::sin(2.0 * std::numbers::pi * x[0]);
  double sum = 0.0;
  for (double v : x) sum += v - 0.5;
  // Var of a sum of d independent U(0,1) is d / 12.
  return s * sum / std::sqrt(static_cast<double>(sc.dim) / 12.0);
}

double truth_value(const Scenario& sc, std::span<const double> x) {
  double f = base_value(sc, x);
  const auto sizes = sc.jump_sizes();
  if (sc.dim == 1) {
    for (std::size_t i = 0; i < sc.step_locations.size(); ++i) {
      if (x[0] >= sc.step_locations[i]) f += sizes[i];
    }
  } else if (distance_to_center(x) < sc.resolved_radius()) {
    f += sizes[0];
  }
  return f;
}

PointCloud sample_cloud(const Scenario& sc) {
  sc.validate();
  auto rng = task_rng(sc.seed, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> x(sc.n * sc.dim);
  std::vector<double> y(sc.n);
  for (std::size_t i = 0; i < sc.n; ++i) {
    for (std::size_t j = 0; j < sc.dim; ++j) x[i * sc.dim + j] = unif(rng);
  }
  for (std::size_t i = 0; i < sc.n; ++i) {
    const std::span<const double> xi(x.data() + i * sc.dim, sc.dim);
    const double eps = sc.sigma > 0.0 ? sc.sigma * noise(rng) : 0.0;
    y[i] = truth_value(sc, xi) + eps;
  }
  return PointCloud(sc.dim, std::move(x), std::move(y));
}

Truth rasterize_truth(const Scenario& sc, const GridSpec& grid) {
  sc.validate();
  if (grid.dim != sc.dim) throw Error(ErrorCode::GridMismatch, "grid and scenario dimensions differ");
  const std::size_t m = grid.spatial_cells();
  Truth t;
  t.surface.resize(m);
  t.jump_mask.assign(m, false);
  t.jump_size.assign(m, 0.0);
  for (std::size_t c = 0; c < m; ++c) t.surface[c] = truth_value(sc, grid.cell_center(c));

  const auto sizes = sc.jump_sizes();
  if (sc.dim == 1) {
    const Range& box = grid.domain_box[0];
    const auto n = static_cast<double>(grid.n_cells[0]);
    for (std::size_t i = 0; i < sc.step_locations.size(); ++i) {
      const double rel = (sc.step_locations[i] - box.lo) / box.width() * n;
      const double k = std::ceil(rel - 1e-9) - 1.0;
      if (k < 0.0 || k >= n) continue;
      const auto cell = static_cast<std::size_t>(k);
      t.jump_mask[cell] = true;
      t.jump_size[cell] += sizes[i];
    }
    return t;
  }
  const double r = sc.resolved_radius();
  for (std::size_t c = 0; c < m; ++c) {
    const auto idx = grid.unravel(c);
    double near_sq = 0.0;
    double far_sq = 0.0;
    for (std::size_t j = 0; j < grid.dim; ++j) {
      const double lo = grid.domain_box[j].lo + static_cast<double>(idx[j]) * grid.cell_width(j);
      const double hi = lo + grid.cell_width(j);
      const double near = std::clamp(0.5, lo, hi) - 0.5;
      const double far = std::max(std::abs(lo - 0.5), std::abs(hi - 0.5));
      near_sq += near * near;
      far_sq += far * far;
    }
    if (std::sqrt(near_sq) <= r && std::sqrt(far_sq) >= r) {
      t.jump_mask[c] = true;
      t.jump_size[c] = sizes[0];
    }
  }
  return t;
}

std::vector<Range> unit_box(std::size_t dim) { return std::vector<Range>(dim, Range{0.0, 1.0}); }

std::vector<std::size_t> default_cells(const Scenario& sc, std::size_t cells_per_axis) {
  if (sc.dim == 1) return {std::max<std::size_t>(sc.n / 20, 2)};
  return std::vector<std::size_t>(sc.dim, cells_per_axis);
}

Sample generate(const Scenario& sc, std::span<const std::size_t> n_cells, std::size_t s_levels,
                double value_padding) {
  Sample s;
  s.scenario = sc;
  s.cloud = sample_cloud(sc);
  s.grid = make_grid_on_box(s.cloud, n_cells, s_levels, unit_box(sc.dim), value_padding);
  s.truth = rasterize_truth(sc, s.grid);
  return s;
}

namespace {

struct RepOutcome {
  Metrics metrics;
  bool ok = false;
  bool converged = true;
  std::string warning;
};

// Seed stream offsets keep pilot clouds apart from rep clouds.
constexpr std::uint64_t kPilotStream = std::uint64_t{1} << 40;

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t stream) {
  auto rng = task_rng(seed, stream);
  return rng();
}

Metrics average(const std::vector<Metrics>& all, const std::vector<bool>& ok, std::size_t begin,
                std::size_t end, std::size_t& used) {
  Metrics sum;
  used = 0;
  for (std::size_t i = begin; i < end; ++i) {
    if (!ok[i]) continue;
    const Metrics& m = all[i];
    sum.mse_u += m.mse_u;
    sum.alpha_hat += m.alpha_hat;
    sum.mse_tau += m.mse_tau;
    sum.bias_tau += m.bias_tau;
    sum.fnr += m.fnr;
    sum.fpr += m.fpr;
    ++used;
  }
  if (used == 0) return sum;
  const auto k = static_cast<double>(used);
  sum.mse_u /= k;
  sum.alpha_hat /= k;
  sum.mse_tau /= k;
  sum.bias_tau /= k;
  sum.fnr /= k;
  sum.fpr /= k;
  return sum;
}

}  // namespace

MonteCarloResult run_monte_carlo(const std::vector<ScenarioBlock>& blocks, std::size_t reps,
                                 const MonteCarloConfig& cfg, const SampleEstimator& estimator) {
  if (reps < 1) throw Error(ErrorCode::InvalidConfig, "need at least one rep");
  if (blocks.empty()) throw Error(ErrorCode::InvalidConfig, "no scenarios");
  for (const auto& block : blocks) {
    if (block.rows.empty()) throw Error(ErrorCode::InvalidConfig, "empty scenario block");
    for (const auto& sc : block.rows) sc.validate();
  }
  cfg.settings.solver.validate();

  MonteCarloResult result;
  std::vector<std::pair<double, double>> theta(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const ScenarioBlock& block = blocks[b];
    if (block.lambda && block.nu) {
      theta[b] = {*block.lambda, *block.nu};
      continue;
    }
    auto pilot = *std::max_element(block.rows.begin(), block.rows.end(),
                                   [](const Scenario& a, const Scenario& c) { return a.n < c.n; });
    pilot.seed = derived_seed(cfg.seed, kPilotStream + b);
    const Sample s = generate(pilot, default_cells(pilot, cfg.sure_cells_per_axis), cfg.s_levels,
                              cfg.value_padding);
    const SureResult sure = sure_search(s.cloud, s.grid, cfg.settings, cfg.sure, cfg.workers);
    theta[b] = {sure.lambda, sure.nu};
  }

  struct Task {
    std::size_t block;
    std::size_t row;
  };
  std::vector<Task> tasks;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t r = 0; r < blocks[b].rows.size(); ++r) {
      for (std::size_t k = 0; k < reps; ++k) tasks.push_back({b, r});
    }
  }

  std::vector<RepOutcome> outcomes(tasks.size());
  parallel_for(tasks.size(), cfg.workers, [&](std::size_t i) {
    const Task& task = tasks[i];
    Scenario sc = blocks[task.block].rows[task.row];
    sc.seed = derived_seed(cfg.seed, i);
    const Sample s = generate(sc, default_cells(sc, cfg.cells_per_axis), cfg.s_levels,
                              cfg.value_padding);
    const auto [lambda, nu] = theta[task.block];
    RepOutcome& out = outcomes[i];
    try {
      FdrEstimate est;
      if (estimator) {
        est = estimator(s, lambda, nu);
      } else {
        EstimatorSettings settings = cfg.settings;
        settings.solver.lambda = lambda;
        settings.solver.nu = nu;
        Fit fit = fit_cloud(s.cloud, s.grid, settings);
        out.converged = fit.report.converged;
        est = std::move(fit.estimate);
      }
      out.metrics = compute_metrics(est, s.truth);
      out.ok = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SolverFailure && e.code() != ErrorCode::NonFiniteIterate) throw;
      out.warning = "rep " + std::to_string(i) + " failed: " + e.what();
    }
  });

  result.rep_metrics.reserve(tasks.size());
  result.rep_ok.reserve(tasks.size());
  for (const auto& o : outcomes) {
    result.rep_metrics.push_back(o.metrics);
    result.rep_ok.push_back(o.ok);
    if (!o.warning.empty()) result.warnings.push_back(o.warning);
  }

  std::size_t begin = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (const Scenario& sc : blocks[b].rows) {
      TableRow row;
      row.block = b;
      row.dim = sc.dim;
      row.cohens_d = sc.cohens_d;
      row.n = sc.n;
      const auto sizes = sc.jump_sizes();
      double mean_abs = 0.0;
      for (double v : sizes) mean_abs += std::abs(v);
      row.alpha = mean_abs / static_cast<double>(sizes.size());
      row.metrics = average(result.rep_metrics, result.rep_ok, begin, begin + reps, row.reps);
      row.failed = reps - row.reps;
      for (std::size_t i = begin; i < begin + reps; ++i) {
        if (!outcomes[i].converged) ++row.nonconverged;
      }
      row.lambda = theta[b].first;
      row.nu = theta[b].second;
      result.rows.push_back(row);
      begin += reps;
    }
  }
  return result;
}

void write_table_csv(std::ostream& out, const std::vector<TableRow>& rows) {
  const auto old_precision = out.precision(10);
  out << "block,dim,d,n,alpha,alpha_hat,mse,mse_tau,bias_tau,fnr,fpr,lambda,nu,reps,failed,"
         "nonconverged\n";
  for (const auto& r : rows) {
    out << r.block << ',' << r.dim << ',' << r.cohens_d << ',' << r.n << ',' << r.alpha << ','
        << r.metrics.alpha_hat << ',' << r.metrics.mse_u << ',' << r.metrics.mse_tau << ','
        << r.metrics.bias_tau << ',' << r.metrics.fnr << ',' << r.metrics.fpr << ',' << r.lambda
        << ',' << r.nu << ',' << r.reps << ',' << r.failed << ',' << r.nonconverged << '\n';
  }
  out.precision(old_precision);
}

}  // namespace fdr
