#include "fdr/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fdr/error.hpp"
#include "fdr/projections.hpp"

namespace fdr {

void SolverConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::InvalidConfig, "lambda must be a nonnegative finite number");
  }
  if (!(nu >= 0.0) || !std::isfinite(nu)) {
    throw Error(ErrorCode::InvalidConfig, "nu must be a nonnegative finite number");
  }
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "tol must be positive");
  if (max_iter < 1) throw Error(ErrorCode::InvalidConfig, "max_iter must be >= 1");
  if (check_every < 1) throw Error(ErrorCode::InvalidConfig, "check_every must be >= 1");
}

namespace {

// Largest eigenvalue of A^T A for the map from a column to all of its
// interval sums; (A^T A)_ab counts the intervals holding both a and b.
double interval_sum_norm_sq(std::size_t levels) {
  const auto n = static_cast<double>(levels);
  std::vector<double> x(levels, 1.0);
  std::vector<double> y(levels);
  double lambda = 0.0;
  for (int it = 0; it < 500; ++it) {
    for (std::size_t a = 0; a < levels; ++a) {
      double acc = 0.0;
      for (std::size_t b = 0; b < levels; ++b) {
        const double lo = static_cast<double>(std::min(a, b)) + 1.0;
        const double hi = static_cast<double>(std::max(a, b)) + 1.0;
        acc += lo * (n - hi + 1.0) * x[b];
      }
      y[a] = acc;
    }
    double norm = 0.0;
    for (double v : y) norm = std::max(norm, std::abs(v));
    const double next = norm / std::max(*std::max_element(x.begin(), x.end()), 1e-300);
    for (std::size_t a = 0; a < levels; ++a) x[a] = y[a] / norm;
    if (std::abs(next - lambda) <= 1e-12 * next) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return lambda;
}

bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

double sup_norm(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

double relative_change(std::span<const double> prev, std::span<const double> curr) {
  if (prev.size() != curr.size()) {
    throw Error(ErrorCode::ShapeMismatch, "iterates differ in size");
  }
  if (!all_finite(curr)) return std::numeric_limits<double>::infinity();
  double diff = 0.0;
  for (std::size_t i = 0; i < curr.size(); ++i) diff = std::max(diff, std::abs(curr[i] - prev[i]));
  return diff / std::max(sup_norm(curr), 1.0);
}

}  // namespace

double residual(std::span<const double> v_prev, std::span<const double> v_curr,
                std::span<const double> p_prev, std::span<const double> p_curr) {
  const double r = std::max(relative_change(v_prev, v_curr), relative_change(p_prev, p_curr));
  return std::isnan(r) ? std::numeric_limits<double>::infinity() : r;
}

CellData normalized_cell_data(const BinnedData& binned, const GridSpec& grid) {
  const std::size_t m = grid.spatial_cells();
  if (binned.f_hat.size() != m || binned.fx_hat.size() != m) {
    throw Error(ErrorCode::GridMismatch, "binned data does not match the grid");
  }
  CellData out;
  out.density.resize(m);
  out.response.resize(m);
  const double floor = density_floor(grid);
  const double volume = grid.domain_volume();
  for (std::size_t c = 0; c < m; ++c) {
    if (!std::isfinite(binned.f_hat[c]) || !std::isfinite(binned.fx_hat[c])) {
      throw Error(ErrorCode::NonFiniteInput, "binned data holds a non-finite value");
    }
    out.density[c] = std::max(binned.fx_hat[c], floor) * volume;
    out.response[c] = grid.to_unit_value(binned.f_hat[c]);
  }
  return out;
}

PrimalDualSolver::PrimalDualSolver(const BinnedData& binned, const GridSpec& grid,
                                   SolverConfig cfg)
    : grid_(grid), cfg_(cfg) {
  grid_.validate();
  cfg_.validate();
  const CellData data = normalized_cell_data(binned, grid_);

  cells_ = grid_.spatial_cells();
  levels_ = grid_.s_levels;
  dim_ = grid_.dim;
  pairs_ = (levels_ * levels_ + levels_) / 2;
  x_scale_ = static_cast<double>(grid_.max_cells());
  t_scale_ = static_cast<double>(levels_);
  nu_scaled_ = cfg_.nu * x_scale_ * t_scale_;
  tau_v_ = 1.0 / (4.0 * static_cast<double>(dim_ + 1));
  sigma_p_ = tau_v_;
  sigma_s_ = 1.0;
  // 1/I alone breaks tau sigma ||K||^2 < 1 once S is large; cap it by the
  // share of the bound left after the D_N block.
  const double room = 0.95 * (1.0 - tau_v_ * sigma_p_ * 4.0 * static_cast<double>(dim_ + 1));
  tau_mu_ = std::min(1.0 / static_cast<double>(pairs_),
                     room / (sigma_p_ * interval_sum_norm_sq(levels_) + sigma_s_));

  weights_.resize(dim_ + 1);
  for (std::size_t j = 0; j < dim_; ++j) {
    weights_[j] = static_cast<double>(grid_.n_cells[j]) / x_scale_;
  }
  weights_[dim_] = 1.0;

  alpha_.resize(cells_);
  offset_.resize(cells_ * levels_);
  for (std::size_t c = 0; c < cells_; ++c) {
    for (std::size_t l = 0; l < levels_; ++l) {
      const auto spec = ParabolaSpec::from_cell(data.density[c], cfg_.lambda,
                                                level_value(l, levels_), data.response[c]);
      if (l == 0) alpha_[c] = spec.alpha * t_scale_ / (x_scale_ * x_scale_);
      offset_[c * levels_ + l] = spec.offset * t_scale_;
    }
  }

  v_.assign(cells_ * levels_, 0.5);
  project_C_inplace(v_, grid_);
  v_bar_ = v_;
  q_ = DualField(grid_);
  s_.assign(cells_ * pairs_ * dim_, 0.0);
  mu_.assign(s_.size(), 0.0);
  q_prev_x_.assign(dim_ * cells_ * levels_, 0.0);
  ptilde_.assign(dim_ * cells_ * levels_, 0.0);
  grad_buf_ = DualField(grid_);
  div_buf_.assign(cells_ * levels_, 0.0);
  prefix_.assign(dim_ * (levels_ + 1) * cells_, 0.0);
  prefix_old_.assign(dim_ * (levels_ + 1) * cells_, 0.0);
  diff_.assign(dim_ * (levels_ + 1) * cells_, 0.0);
  scratch_.assign((2 * dim_ + 1) * cells_, 0.0);
}

namespace {

template <std::size_t D>
void dual_pass(std::size_t lifted, std::size_t levels, double sigma, const double* grad,
               const double* ptilde, const double* alpha, const double* offset, double* q) {
  std::array<double, D + 1> point;
  for (std::size_t i = 0; i < lifted; ++i) {
    for (std::size_t j = 0; j < D; ++j) {
      point[j] = q[j * lifted + i] + sigma * (grad[j * lifted + i] + ptilde[j * lifted + i]);
    }
    point[D] = q[D * lifted + i] + sigma * grad[D * lifted + i];
    project_parabola(point, {alpha[i / levels], offset[i]});
    for (std::size_t j = 0; j <= D; ++j) q[j * lifted + i] = point[j];
  }
}

void dual_pass_dynamic(std::size_t dim, std::size_t lifted, std::size_t levels, double sigma,
                       const double* grad, const double* ptilde, const double* alpha,
                       const double* offset, double* q) {
  std::vector<double> point(dim + 1);
  for (std::size_t i = 0; i < lifted; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      point[j] = q[j * lifted + i] + sigma * (grad[j * lifted + i] + ptilde[j * lifted + i]);
    }
    point[dim] = q[dim * lifted + i] + sigma * grad[dim * lifted + i];
    project_parabola(point, {alpha[i / levels], offset[i]});
    for (std::size_t j = 0; j <= dim; ++j) q[j * lifted + i] = point[j];
  }
}

}  // namespace

void PrimalDualSolver::step() {
  const std::size_t lifted = cells_ * levels_;

  // (i) dual ascent on p followed by the pointwise parabola projection;
  // outflow faces stay at zero, which is feasible for every parabola.
  std::copy_n(q_.data.begin(), dim_ * lifted, q_prev_x_.begin());
  weighted_gradient(v_bar_, grid_, weights_, grad_buf_);
  const double* grad = grad_buf_.data.data();
  switch (dim_) {
    case 1:
      dual_pass<1>(lifted, levels_, sigma_p_, grad, ptilde_.data(), alpha_.data(),
                   offset_.data(), q_.data.data());
      break;
    case 2:
      dual_pass<2>(lifted, levels_, sigma_p_, grad, ptilde_.data(), alpha_.data(),
                   offset_.data(), q_.data.data());
      break;
    case 3:
      dual_pass<3>(lifted, levels_, sigma_p_, grad, ptilde_.data(), alpha_.data(),
                   offset_.data(), q_.data.data());
      break;
    default:
      dual_pass_dynamic(dim_, lifted, levels_, sigma_p_, grad, ptilde_.data(), alpha_.data(),
                        offset_.data(), q_.data.data());
  }

  zero_outflow(q_, grid_);

  // (ii) s ascent with the ball projection, (iv) multiplier descent and
  // (vi) multiplier extrapolation, fused per (cell, pair). The extrapolated
  // multipliers are scattered into p-tilde for the next pass.
  update_pairs();

  // (iii) primal descent and projection onto C, (v) primal extrapolation.
  weighted_adjoint(q_, grid_, weights_, div_buf_);
  for (std::size_t i = 0; i < lifted; ++i) {
    const double prev = v_[i];
    v_[i] = prev - tau_v_ * div_buf_[i];
    v_bar_[i] = prev;  // stash v^n
  }
  project_C_inplace(v_, grid_);
  for (std::size_t i = 0; i < lifted; ++i) v_bar_[i] = 2.0 * v_[i] - v_bar_[i];

  ++iteration_;
}

namespace {

// Kernels of the pair update, one (pair, component) row of cells at a time.

// t = s - sigma (mu + tau (s - (hi - lo))), norm += t^2.
void pair_trial(std::size_t m, double tau, double sigma, const double* __restrict lo,
                const double* __restrict hi, const double* __restrict s,
                const double* __restrict mu, double* __restrict t, double* __restrict norm) {
  for (std::size_t c = 0; c < m; ++c) {
    const double mu_bar = mu[c] + tau * (s[c] - (hi[c] - lo[c]));
    t[c] = s[c] - sigma * mu_bar;
    norm[c] += t[c] * t[c];
  }
}

// s = t, mu += tau (t - (hi - lo)); the extrapolated multiplier is added to
// head and subtracted from tail.
void pair_update(std::size_t m, double tau, const double* __restrict lo,
                 const double* __restrict hi, const double* __restrict t, double* __restrict s,
                 double* __restrict mu, double* __restrict head, double* __restrict tail) {
  for (std::size_t c = 0; c < m; ++c) {
    const double step = tau * (t[c] - (hi[c] - lo[c]));
    const double mu_new = mu[c] + step;
    const double ext = mu_new + step;
    s[c] = t[c];
    mu[c] = mu_new;
    head[c] += ext;
    tail[c] -= ext;
  }
}

void ball_scale(std::size_t m, double nu, double* __restrict norm) {
  for (std::size_t c = 0; c < m; ++c) norm[c] = std::min(1.0, nu / std::sqrt(norm[c]));
}

void scale_rows(std::size_t m, const double* __restrict factor, double* __restrict x) {
  for (std::size_t c = 0; c < m; ++c) x[c] *= factor[c];
}

void clamp_rows(std::size_t m, double nu, double* __restrict x) {
  for (std::size_t c = 0; c < m; ++c) x[c] = std::clamp(x[c], -nu, nu);
}

void flush_rows(std::size_t m, double* __restrict acc, double* __restrict row) {
  for (std::size_t c = 0; c < m; ++c) {
    row[c] += acc[c];
    acc[c] = 0.0;
  }
}

}  // namespace

void PrimalDualSolver::update_pairs() {
  // Vectorized over cells: every array below is laid out with the cell index
  // fastest, so each (pair, component) touches contiguous memory.
  const std::size_t lifted = cells_ * levels_;
  const std::size_t rows = levels_ + 1;
  const std::size_t m = cells_;

  for (std::size_t j = 0; j < dim_; ++j) {
    const double* q_old = q_prev_x_.data() + j * lifted;
    const double* q_new = q_.data.data() + j * lifted;
    double* pre_old = prefix_old_.data() + j * rows * m;
    double* pre_new = prefix_.data() + j * rows * m;
    for (std::size_t c = 0; c < m; ++c) {
      double acc_old = 0.0;
      double acc_new = 0.0;
      pre_old[c] = 0.0;
      pre_new[c] = 0.0;
      for (std::size_t l = 0; l < levels_; ++l) {
        acc_old += q_old[c * levels_ + l];
        acc_new += q_new[c * levels_ + l];
        pre_old[(l + 1) * m + c] = acc_old;
        pre_new[(l + 1) * m + c] = acc_new;
      }
    }
  }
  std::fill(diff_.begin(), diff_.end(), 0.0);

  double* norm = scratch_.data();
  auto trial = [&](std::size_t j) { return scratch_.data() + (1 + j) * m; };
  auto head = [&](std::size_t j) { return scratch_.data() + (1 + dim_ + j) * m; };
  auto row = [&](const std::vector<double>& a, std::size_t j, std::size_t l) {
    return a.data() + (j * rows + l) * m;
  };
  std::size_t pair = 0;
  for (std::size_t s1 = 0; s1 < levels_; ++s1) {
    for (std::size_t s2 = s1; s2 < levels_; ++s2, ++pair) {
      // s <- proj_{|.| <= nu}(s - sigma mu_bar), mu_bar = mu + tau (s - A q_old).
      std::fill_n(norm, m, 0.0);
      for (std::size_t j = 0; j < dim_; ++j) {
        const std::size_t at = (j * pairs_ + pair) * m;
        pair_trial(m, tau_mu_, sigma_s_, row(prefix_old_, j, s1), row(prefix_old_, j, s2 + 1),
                   s_.data() + at, mu_.data() + at, trial(j), norm);
      }
      if (dim_ == 1) {
        clamp_rows(m, nu_scaled_, trial(0));
      } else {
        ball_scale(m, nu_scaled_, norm);
        for (std::size_t j = 0; j < dim_; ++j) scale_rows(m, norm, trial(j));
      }
      // mu <- mu + tau (s - A q_new); the extrapolation 2 mu - mu_prev goes
      // into the difference array of p-tilde.
      for (std::size_t j = 0; j < dim_; ++j) {
        const std::size_t at = (j * pairs_ + pair) * m;
        pair_update(m, tau_mu_, row(prefix_, j, s1), row(prefix_, j, s2 + 1), trial(j),
                    s_.data() + at, mu_.data() + at, head(j),
                    diff_.data() + (j * rows + s2 + 1) * m);
      }
    }
    for (std::size_t j = 0; j < dim_; ++j) {
      flush_rows(m, head(j), diff_.data() + (j * rows + s1) * m);
    }
  }

  for (std::size_t j = 0; j < dim_; ++j) {
    const double* d = diff_.data() + j * rows * m;
    double* pt = ptilde_.data() + j * lifted;
    for (std::size_t c = 0; c < m; ++c) {
      double running = 0.0;
      for (std::size_t l = 0; l < levels_; ++l) {
        running += d[l * m + c];
        pt[c * levels_ + l] = running;
      }
    }
  }
}

void PrimalDualSolver::warm_start(const SolverState& state) {
  if (state.v.size() != v_.size() || state.q.size() != q_.data.size() ||
      state.s.size() != s_.size() || state.mu.size() != mu_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "warm-start state does not match the grid");
  }
  v_ = state.v;
  project_C_inplace(v_, grid_);
  v_bar_ = v_;
  q_.data = state.q;
  s_ = state.s;
  mu_ = state.mu;
  // p-tilde is rebuilt from the multipliers, which act as their own
  // extrapolation on the first step.
  const std::size_t lifted = cells_ * levels_;
  const std::size_t m = cells_;
  const std::size_t rows = levels_ + 1;
  std::fill(diff_.begin(), diff_.end(), 0.0);
  std::size_t pair = 0;
  for (std::size_t s1 = 0; s1 < levels_; ++s1) {
    for (std::size_t s2 = s1; s2 < levels_; ++s2, ++pair) {
      for (std::size_t j = 0; j < dim_; ++j) {
        const double* mj = mu_.data() + (j * pairs_ + pair) * m;
        double* head = diff_.data() + (j * rows + s1) * m;
        double* tail = diff_.data() + (j * rows + s2 + 1) * m;
        for (std::size_t c = 0; c < m; ++c) {
          head[c] += mj[c];
          tail[c] -= mj[c];
        }
      }
    }
  }
  for (std::size_t j = 0; j < dim_; ++j) {
    const double* d = diff_.data() + j * rows * m;
    double* pt = ptilde_.data() + j * lifted;
    for (std::size_t c = 0; c < m; ++c) {
      double running = 0.0;
      for (std::size_t l = 0; l < levels_; ++l) {
        running += d[l * m + c];
        pt[c * levels_ + l] = running;
      }
    }
  }
}

SolverState PrimalDualSolver::state() const { return {v_, q_.data, s_, mu_}; }

DualField PrimalDualSolver::unscaled_dual() const {
  DualField p = q_;
  const std::size_t lifted = cells_ * levels_;
  for (std::size_t j = 0; j <= dim_; ++j) {
    const double scale = j < dim_ ? x_scale_ : t_scale_;
    for (std::size_t i = 0; i < lifted; ++i) p.data[j * lifted + i] /= scale;
  }
  return p;
}

double PrimalDualSolver::max_parabola_violation() const {
  const std::size_t lifted = cells_ * levels_;
  double worst = 0.0;
  for (std::size_t i = 0; i < lifted; ++i) {
    double norm_sq = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double x = q_.data[j * lifted + i];
      norm_sq += x * x;
    }
    const double gap = alpha_[i / levels_] * norm_sq - offset_[i] - q_.data[dim_ * lifted + i];
    worst = std::max(worst, gap / t_scale_);
  }
  return worst;
}

double PrimalDualSolver::max_aux_excess() const {
  double worst = 0.0;
  const std::size_t comp_stride = cells_ * pairs_;
  for (std::size_t idx = 0; idx < comp_stride; ++idx) {
    double norm_sq = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      norm_sq += s_[j * comp_stride + idx] * s_[j * comp_stride + idx];
    }
    worst = std::max(worst, std::sqrt(norm_sq) / (x_scale_ * t_scale_) - cfg_.nu);
  }
  return worst;
}

double PrimalDualSolver::max_partial_sum_excess() const {
  const std::size_t lifted = cells_ * levels_;
  double worst = 0.0;
  std::vector<double> pre(dim_ * (levels_ + 1));
  for (std::size_t c = 0; c < cells_; ++c) {
    for (std::size_t j = 0; j < dim_; ++j) {
      const double* qx = q_.data.data() + j * lifted + c * levels_;
      pre[j * (levels_ + 1)] = 0.0;
      for (std::size_t l = 0; l < levels_; ++l) {
        pre[j * (levels_ + 1) + l + 1] = pre[j * (levels_ + 1) + l] + qx[l];
      }
    }
    for (std::size_t s1 = 0; s1 < levels_; ++s1) {
      for (std::size_t s2 = s1; s2 < levels_; ++s2) {
        double norm_sq = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) {
          const double sum = pre[j * (levels_ + 1) + s2 + 1] - pre[j * (levels_ + 1) + s1];
          norm_sq += sum * sum;
        }
        worst = std::max(worst, std::sqrt(norm_sq) / (x_scale_ * t_scale_) - cfg_.nu);
      }
    }
  }
  return worst;
}

bool PrimalDualSolver::primal_feasible() const {
  for (std::size_t base = 0; base < v_.size(); base += levels_) {
    if (v_[base] != 1.0 || v_[base + levels_ - 1] != 0.0) return false;
    for (std::size_t l = 0; l < levels_; ++l) {
      const double x = v_[base + l];
      if (!(x >= 0.0 && x <= 1.0)) return false;
    }
  }
  return true;
}

SolveReport PrimalDualSolver::run(const Observer& observer) {
  SolveReport report;
  std::vector<double> v_check = v_;
  DualField p_check = unscaled_dual();
  report.residual = std::numeric_limits<double>::infinity();
  int last_check = iteration_;
  while (iteration_ < cfg_.max_iter) {
    step();
    if (observer) observer(*this);
    if (iteration_ % cfg_.check_every == 0 || iteration_ == cfg_.max_iter) {
      if (!all_finite(v_) || !all_finite(q_.data)) {
        throw Error(ErrorCode::NonFiniteIterate,
                    "iterate became non-finite at iteration " + std::to_string(iteration_));
      }
      DualField p_now = unscaled_dual();
      const int span = iteration_ - last_check;
      last_check = iteration_;
      report.residual =
          residual(v_check, v_, p_check.data, p_now.data) / static_cast<double>(span);
      v_check = v_;
      p_check = std::move(p_now);
      if (report.residual < cfg_.tol) {
        report.converged = true;
        break;
      }
    }
  }
  report.iterations = iteration_;
  report.v_star.values = v_;
  const DualField p = unscaled_dual();
  report.energy = pairing(p, report.v_star, grid_, false);
  report.energy_normalized = report.energy / static_cast<double>(grid_.lifted_cells());
  report.feasibility_gap = std::max({max_parabola_violation(), max_partial_sum_excess(), 0.0});
  return report;
}

SolveReport solve(const BinnedData& binned, const GridSpec& grid, const SolverConfig& cfg,
                  const PrimalDualSolver::Observer& observer, const SolverState* init,
                  SolverState* final_state) {
  PrimalDualSolver solver(binned, grid, cfg);
  if (init != nullptr) solver.warm_start(*init);
  SolveReport report = solver.run(observer);
  if (final_state != nullptr) *final_state = solver.state();
  return report;
}

}  // namespace fdr
