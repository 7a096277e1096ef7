#include "fdr/app.hpp"

#include <json.hpp>

#include <ostream>
#include <sstream>

#include "fdr/inference.hpp"
#include "fdr/io.hpp"
#include "fdr/simulate.hpp"
#include "fdr/sure.hpp"

namespace fdr {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::GridMismatch:
    case ErrorCode::ShapeMismatch:
      return kExitConfig;
    case ErrorCode::Io:
    case ErrorCode::EmptyCloud:
    case ErrorCode::NonFiniteInput:
      return kExitIo;
    case ErrorCode::NonpositiveCurvature:
    case ErrorCode::NonFiniteIterate:
    case ErrorCode::SolverFailure:
    case ErrorCode::AllCandidatesFailed:
    case ErrorCode::TooFewReps:
      return kExitSolver;
  }
  return kExitSolver;
}

void apply_overrides(RunConfig& cfg, const Overrides& o) {
  if (o.output) cfg.output = *o.output;
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  cfg.sure.seed = cfg.seed;
  cfg.bands.subsampling.seed = cfg.seed;
}

namespace {

// Files written by a command, in write order, for the manifest.
class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {}

  fs::path path(const std::string& name) {
    names_.push_back(name);
    return dir_ / name;
  }
  void text(const std::string& name, const std::string& body) { write_text(path(name), body); }
  void json(const std::string& name, const Json& body) { text(name, body.dump(2) + "\n"); }
  const std::vector<std::string>& names() const { return names_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
};

GridSpec build_grid(const PointCloud& cloud, const GridSettings& g) {
  const auto cells = g.resolved_cells(cloud.dim());
  if (!g.domain.empty()) {
    if (g.domain.size() != cloud.dim()) {
      throw Error(ErrorCode::InvalidConfig, "grid.domain needs one range per axis");
    }
    return make_grid_on_box(cloud, cells, g.levels, g.domain, g.value_padding);
  }
  return make_grid(cloud, cells, g.levels, g.domain_padding, g.value_padding);
}

Json grid_json(const GridSpec& grid) {
  Json j;
  j["cells"] = grid.n_cells;
  j["levels"] = grid.s_levels;
  Json box = Json::array();
  for (const auto& r : grid.domain_box) box.push_back({r.lo, r.hi});
  j["domain"] = box;
  j["value_range"] = {grid.value_range.lo, grid.value_range.hi};
  return j;
}

Json report_json(const SolveReport& r) {
  Json j;
  j["status"] = r.converged ? "Converged" : "NotConverged";
  j["iterations"] = r.iterations;
  j["residual"] = r.residual;
  j["energy"] = r.energy;
  j["energy_normalized"] = r.energy_normalized;
  j["feasibility_gap"] = r.feasibility_gap;
  return j;
}

void warn(std::ostream& log, Json& warnings, const std::string& msg) {
  log << "warning: " << msg << '\n';
  warnings.push_back(msg);
}

void write_fit_tables(Artifacts& out, const GridSpec& grid, const Fit& fit) {
  write_cell_table(out.path("u_hat.csv"), grid,
                   {{"u_hat", fit.estimate.u_hat},
                    {"f_hat", fit.binned.f_hat},
                    {"empty", as_doubles(fit.binned.empty_mask)},
                    {"jump", as_doubles(fit.estimate.jump_mask)}});
  write_cell_table(out.path("jump_set.csv"), grid,
                   {{"jump_size", fit.estimate.jump_size},
                    {"gradient_mag", fit.estimate.gradient_mag}},
                   selected_cells(fit.estimate.jump_mask));
}

void run_fit(const RunConfig& cfg, Artifacts& out, Json& summary, std::ostream& log) {
  const PointCloud cloud = read_cloud_csv(cfg.input);
  const GridSpec grid = build_grid(cloud, cfg.grid);
  const Fit fit = fit_cloud(cloud, grid, cfg.estimator);
  write_fit_tables(out, grid, fit);
  summary["lambda"] = cfg.estimator.solver.lambda;
  summary["nu"] = cfg.estimator.solver.nu;
  summary["n"] = cloud.size();
  summary["grid"] = grid_json(grid);
  summary["solver"] = report_json(fit.report);
  summary["jump_cells"] = selected_cells(fit.estimate.jump_mask).size();
  if (!fit.report.converged) {
    warn(log, summary["warnings"], "solver stopped at max_iter before reaching tol");
  }
}

void run_sure(const RunConfig& cfg, Artifacts& out, Json& summary, std::ostream&) {
  const PointCloud cloud = read_cloud_csv(cfg.input);
  const GridSpec grid = build_grid(cloud, cfg.grid);
  const SureResult res = sure_search(cloud, grid, cfg.estimator, cfg.sure, cfg.workers);
  std::ostringstream table;
  table << "lambda,nu,eta,converged\n";
  for (const auto& row : res.table) {
    table << format_double(row.lambda) << ',' << format_double(row.nu) << ','
          << format_double(row.eta) << ',' << (row.converged ? 1 : 0) << '\n';
  }
  out.text("sure_table.csv", table.str());
  summary["lambda"] = res.lambda;
  summary["nu"] = res.nu;
  summary["eta"] = res.eta;
  summary["sigma"] = res.sigma;
  summary["candidates"] = res.table.size();
  summary["grid"] = grid_json(grid);
}

void run_bands(const RunConfig& cfg, Artifacts& out, Json& summary, std::ostream& log) {
  const PointCloud cloud = read_cloud_csv(cfg.input);
  const GridSpec grid = build_grid(cloud, cfg.grid);
  summary["lambda"] = cfg.estimator.solver.lambda;
  summary["nu"] = cfg.estimator.solver.nu;
  summary["grid"] = grid_json(grid);
  const BandMethod method = cfg.bands.method;

  if (method != BandMethod::Conformal) {
    const Fit full = fit_cloud(cloud, grid, cfg.estimator);
    if (!full.report.converged) {
      warn(log, summary["warnings"], "full-sample solve stopped at max_iter before reaching tol");
    }
    write_fit_tables(out, grid, full);
    const BandResult res =
        subsample_bands(cloud, grid, full, cfg.estimator, cfg.bands.subsampling, cfg.workers);
    write_cell_table(out.path("bands.csv"), grid,
                     {{"u_hat", res.surface.center},
                      {"lower", res.surface.lower},
                      {"upper", res.surface.upper},
                      {"jump", as_doubles(full.estimate.jump_mask)},
                      {"jump_diff", res.jumps.center},
                      {"jump_lower", res.jumps.lower},
                      {"jump_upper", res.jumps.upper},
                      {"significant", as_doubles(res.significant_jump_mask)}});
    write_cell_table(out.path("significant_jumps.csv"), grid,
                     {{"jump_diff", res.jumps.center},
                      {"jump_lower", res.jumps.lower},
                      {"jump_upper", res.jumps.upper}},
                     selected_cells(res.significant_jump_mask));
    Json j;
    j["solver"] = report_json(full.report);
    j["alpha"] = cfg.bands.subsampling.alpha;
    j["sizes"] = cfg.bands.subsampling.resolved_sizes(cloud.size());
    j["reps"] = cfg.bands.subsampling.j_reps;
    j["beta_hat"] = res.surface.beta_hat;
    j["z_alpha"] = res.surface.z_alpha;
    j["half_width"] = res.surface.half_width;
    j["jump_beta_hat"] = res.jumps.beta_hat;
    j["jump_z_alpha"] = res.jumps.z_alpha;
    j["jump_half_width"] = res.jumps.half_width;
    j["significant_jumps"] = selected_cells(res.significant_jump_mask).size();
    j["dropped"] = res.dropped;
    j["nonconverged"] = res.nonconverged;
    summary["subsampling"] = j;
    for (const auto& w : res.warnings) warn(log, summary["warnings"], w);
  }
  if (method != BandMethod::Subsampling) {
    const ConformalResult res =
        conformal_bands(cloud, grid, cfg.estimator, cfg.bands.conformal_alpha, cfg.seed);
    write_cell_table(out.path("conformal_bands.csv"), grid,
                     {{"u_hat", res.u_hat},
                      {"lower", res.lower},
                      {"upper", res.upper},
                      {"jump", as_doubles(res.jump_mask)},
                      {"jump_diff", res.diff_hat},
                      {"jump_lower", res.diff_lower},
                      {"jump_upper", res.diff_upper},
                      {"significant", as_doubles(res.significant_jump_mask)}});
    Json j;
    j["alpha"] = cfg.bands.conformal_alpha;
    j["d_alpha"] = res.d_alpha;
    j["d_alpha_jump"] = res.d_alpha_diff;
    j["fit_points"] = res.fit_rows.size();
    j["calibration_points"] = res.calibration_rows.size();
    j["converged"] = res.converged;
    summary["conformal"] = j;
    if (!res.converged) warn(log, summary["warnings"], "conformal fit stopped at max_iter");
  }
}

void run_simulate(const RunConfig& cfg, Artifacts& out, Json& summary, std::ostream& log) {
  MonteCarloConfig mc;
  mc.cells_per_axis = cfg.simulate.cells_per_axis;
  mc.sure_cells_per_axis = cfg.simulate.sure_cells_per_axis;
  mc.s_levels = cfg.grid.levels;
  mc.value_padding = cfg.grid.value_padding;
  mc.settings = cfg.estimator;
  mc.sure = cfg.sure;
  mc.seed = cfg.seed;
  mc.workers = cfg.workers;
  const MonteCarloResult res = run_monte_carlo(cfg.scenario_blocks(), cfg.simulate.reps, mc);
  std::ostringstream table;
  write_table_csv(table, res.rows);
  out.text("table1.csv", table.str());
  summary["rows"] = res.rows.size();
  summary["reps"] = cfg.simulate.reps;
  Json theta = Json::array();
  for (const auto& row : res.rows) {
    if (theta.empty() || theta.back()["block"] != row.block) {
      theta.push_back({{"block", row.block}, {"lambda", row.lambda}, {"nu", row.nu}});
    }
  }
  summary["theta"] = theta;
  for (const auto& w : res.warnings) warn(log, summary["warnings"], w);
}

}  // namespace

void run_command(Command cmd, const RunConfig& cfg_in, std::ostream& log) {
  RunConfig cfg = cfg_in;
  cfg.command = cmd;
  cfg.validate(cmd);
  std::error_code ec;
  fs::create_directories(cfg.output, ec);
  if (ec || !fs::is_directory(cfg.output)) {
    throw Error(ErrorCode::Io, "cannot create output directory " + cfg.output.string());
  }
  if (cmd != Command::Simulate && !fs::is_regular_file(cfg.input)) {
    throw Error(ErrorCode::Io, "input file not found: " + cfg.input.string());
  }

  Artifacts out(cfg.output);
  Json summary;
  summary["command"] = to_string(cmd);
  summary["seed"] = cfg.seed;
  summary["warnings"] = Json::array();
  switch (cmd) {
    case Command::Fit:
      run_fit(cfg, out, summary, log);
      break;
    case Command::Sure:
      run_sure(cfg, out, summary, log);
      break;
    case Command::Bands:
      run_bands(cfg, out, summary, log);
      break;
    case Command::Simulate:
      run_simulate(cfg, out, summary, log);
      break;
  }
  out.json("summary.json", summary);

  RunConfig pinned = cfg;
  pinned.output.clear();
  const std::string ini = to_ini(pinned);
  Json manifest;
  manifest["command"] = to_string(cmd);
  manifest["seed"] = cfg.seed;
  manifest["config"] = "manifest.ini";
  manifest["config_sha256"] = sha256_hex(ini);
  Json files = Json::object();
  for (const auto& name : out.names()) files[name] = sha256_hex(read_text(out.dir() / name));
  manifest["outputs"] = files;
  write_text(out.dir() / "manifest.ini", ini);
  write_text(out.dir() / "manifest.json", manifest.dump(2) + "\n");
}

int run_cli(Command cmd, const fs::path& config_path, const Overrides& o, std::ostream& log) {
  try {
    RunConfig cfg = load_config(config_path);
    apply_overrides(cfg, o);
    run_command(cmd, cfg, log);
    return kExitOk;
  } catch (const Error& e) {
    // A missing config file is a config problem, not a data I/O problem.
    log << "error: " << e.what() << '\n';
    if (e.code() == ErrorCode::Io && !fs::exists(config_path)) return kExitConfig;
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitSolver;
  }
}

}  // namespace fdr
