#include "fdr/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "fdr/error.hpp"
#include "fdr/io.hpp"

namespace fdr {

namespace pt = boost::property_tree;

const char* to_string(Command c) noexcept {
  switch (c) {
    case Command::Fit:
      return "fit";
    case Command::Sure:
      return "sure";
    case Command::Bands:
      return "bands";
    case Command::Simulate:
      return "simulate";
  }
  return "unknown";
}

std::optional<Command> parse_command(const std::string& name) {
  for (Command c : {Command::Fit, Command::Sure, Command::Bands, Command::Simulate}) {
    if (name == to_string(c)) return c;
  }
  return std::nullopt;
}

std::vector<std::size_t> GridSettings::resolved_cells(std::size_t dim) const {
  if (cells.size() == 1) return std::vector<std::size_t>(dim, cells[0]);
  if (cells.size() != dim) {
    throw Error(ErrorCode::InvalidConfig, "grid.cells needs one value or one per axis");
  }
  return cells;
}

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw Error(ErrorCode::InvalidConfig, key + ": " + why);
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v)) {
    bad(key, "expected a finite number, got '" + text + "'");
  }
  return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    bad(key, "expected a nonnegative integer, got '" + text + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  bad(key, "expected true or false, got '" + text + "'");
}

Range to_range(const std::string& key, const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) bad(key, "expected lo:hi");
  return {to_double(key, trim(text.substr(0, colon))), to_double(key, trim(text.substr(colon + 1)))};
}

// Typed access to one section, recording which keys were consumed.
class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  std::optional<std::string> raw(const std::string& key) {
    used_.insert(key);
    if (!tree_) return std::nullopt;
    const auto it = tree_->find(key);
    if (it == tree_->not_found()) return std::nullopt;
    return trim(it->second.data());
  }
  std::string full(const std::string& key) const { return name_ + "." + key; }

  void get(const std::string& key, double& out) {
    if (auto v = raw(key)) out = to_double(full(key), *v);
  }
  void get(const std::string& key, std::optional<double>& out) {
    if (auto v = raw(key)) out = v->empty() ? std::nullopt : std::optional(to_double(full(key), *v));
  }
  void get(const std::string& key, std::size_t& out) {
    if (auto v = raw(key)) out = static_cast<std::size_t>(to_uint(full(key), *v));
  }
  void get(const std::string& key, int& out) {
    if (auto v = raw(key)) {
      const auto u = to_uint(full(key), *v);
      if (u > 1'000'000'000) bad(full(key), "value too large");
      out = static_cast<int>(u);
    }
  }
  void get(const std::string& key, bool& out) {
    if (auto v = raw(key)) out = to_bool(full(key), *v);
  }
  void get(const std::string& key, std::vector<double>& out) {
    if (auto v = raw(key)) {
      out.clear();
      for (const auto& item : split_list(*v)) out.push_back(to_double(full(key), item));
    }
  }
  void get(const std::string& key, std::vector<std::size_t>& out) {
    if (auto v = raw(key)) {
      out.clear();
      for (const auto& item : split_list(*v)) {
        out.push_back(static_cast<std::size_t>(to_uint(full(key), item)));
      }
    }
  }
  template <class E>
  void get_enum(const std::string& key, E& out, const std::map<std::string, E>& names) {
    if (auto v = raw(key)) {
      const auto it = names.find(*v);
      if (it == names.end()) bad(full(key), "unknown value '" + *v + "'");
      out = it->second;
    }
  }

  void check_unknown() const {
    if (!tree_) return;
    for (const auto& [key, _] : *tree_) {
      if (!used_.count(key)) bad(full(key), "unknown key");
    }
  }

 private:
  const pt::ptree* tree_;
  std::string name_;
  std::set<std::string> used_;
};

const std::map<std::string, DensityMode> kDensity{{"histogram", DensityMode::Histogram},
                                                   {"uniform", DensityMode::Uniform}};
const std::map<std::string, SigmaMode> kSigma{{"raw", SigmaMode::Raw},
                                               {"per_cell", SigmaMode::PerCell}};
const std::map<std::string, BandMethod> kMethod{{"subsampling", BandMethod::Subsampling},
                                                 {"conformal", BandMethod::Conformal},
                                                 {"both", BandMethod::Both}};
const std::map<std::string, ScenarioKind> kScenario{{"fig1", ScenarioKind::Fig1},
                                                     {"steps", ScenarioKind::Steps},
                                                     {"circle", ScenarioKind::Circle},
                                                     {"sphere", ScenarioKind::Sphere}};

template <class E>
std::string enum_name(E value, const std::map<std::string, E>& names) {
  for (const auto& [name, v] : names) {
    if (v == value) return name;
  }
  return {};
}

const pt::ptree* child(const pt::ptree& root, const std::string& name) {
  const auto it = root.find(name);
  return it == root.not_found() ? nullptr : &it->second;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree root;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed config: ") + e.message() +
                                              " (line " + std::to_string(e.line()) + ")");
  }
  static const std::set<std::string> kSections{"run",  "grid",  "estimator", "solver",
                                               "sure", "bands", "simulate"};
  for (const auto& [name, sub] : root) {
    if (!kSections.count(name)) bad(name, "unknown section");
    if (sub.empty() && !sub.data().empty()) bad(name, "keys must live inside a section");
  }

  RunConfig cfg;
  {
    Section s(child(root, "run"), "run");
    if (auto v = s.raw("command"); v && !v->empty()) {
      cfg.command = parse_command(*v);
      if (!cfg.command) bad("run.command", "unknown command '" + *v + "'");
    }
    if (auto v = s.raw("input"); v && !v->empty()) {
      std::filesystem::path p(*v);
      cfg.input = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    if (auto v = s.raw("output"); v && !v->empty()) cfg.output = *v;
    s.get("seed", cfg.seed);
    s.get("workers", cfg.workers);
    s.check_unknown();
  }
  {
    Section s(child(root, "grid"), "grid");
    s.get("cells", cfg.grid.cells);
    s.get("levels", cfg.grid.levels);
    s.get("domain_padding", cfg.grid.domain_padding);
    s.get("value_padding", cfg.grid.value_padding);
    if (auto v = s.raw("domain"); v && !v->empty()) {
      for (const auto& item : split_list(*v)) cfg.grid.domain.push_back(to_range("grid.domain", item));
    }
    s.check_unknown();
  }
  {
    Section s(child(root, "estimator"), "estimator");
    s.get("winsor_q", cfg.estimator.winsor_q);
    s.get_enum("density", cfg.estimator.density, kDensity);
    s.check_unknown();
  }
  {
    Section s(child(root, "solver"), "solver");
    SolverConfig& sc = cfg.estimator.solver;
    s.get("lambda", sc.lambda);
    s.get("nu", sc.nu);
    s.get("tol", sc.tol);
    s.get("max_iter", sc.max_iter);
    s.get("check_every", sc.check_every);
    s.check_unknown();
  }
  {
    Section s(child(root, "sure"), "sure");
    SureConfig& sc = cfg.sure;
    s.get("sigma", sc.sigma);
    s.get_enum("sigma_mode", sc.sigma_mode, kSigma);
    s.get("delta", sc.delta);
    s.get("draws", sc.r_draws);
    s.get("lambda_min", sc.lambda_range.lo);
    s.get("lambda_max", sc.lambda_range.hi);
    s.get("nu_min", sc.nu_range.lo);
    s.get("nu_max", sc.nu_range.hi);
    s.get("n_lambda", sc.n_lambda);
    s.get("n_nu", sc.n_nu);
    s.get("log_uniform", sc.log_uniform);
    s.check_unknown();
  }
  {
    Section s(child(root, "bands"), "bands");
    BandSettings& b = cfg.bands;
    s.get_enum("method", b.method, kMethod);
    s.get("alpha", b.subsampling.alpha);
    s.get("reps", b.subsampling.j_reps);
    s.get("sizes", b.subsampling.block_sizes);
    std::vector<double> pairs;
    s.get("quantile_pairs", pairs);
    if (!pairs.empty()) {
      if (pairs.size() % 2 != 0) bad("bands.quantile_pairs", "expected s1,t1,s2,t2,...");
      b.subsampling.quantile_pairs.clear();
      for (std::size_t i = 0; i < pairs.size(); i += 2) {
        b.subsampling.quantile_pairs.emplace_back(pairs[i], pairs[i + 1]);
      }
    }
    s.get("conformal_alpha", b.conformal_alpha);
    s.check_unknown();
  }
  {
    Section s(child(root, "simulate"), "simulate");
    SimulateSettings& m = cfg.simulate;
    s.get_enum("scenario", m.scenario, kScenario);
    s.get("d", m.cohens_d);
    s.get("n", m.n);
    s.get("reps", m.reps);
    s.get("sigma", m.sigma);
    s.get("base_sd", m.base_sd);
    s.get("radius", m.radius);
    s.get("steps", m.steps);
    s.get("cells_per_axis", m.cells_per_axis);
    s.get("sure_cells_per_axis", m.sure_cells_per_axis);
    s.get("lambda", m.lambda);
    s.get("nu", m.nu);
    s.check_unknown();
  }
  cfg.sure.seed = cfg.seed;
  cfg.bands.subsampling.seed = cfg.seed;
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  return parse_config(text, path.parent_path());
}

namespace {

template <class T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

}  // namespace

std::string to_ini(const RunConfig& cfg) {
  std::ostringstream o;
  const auto num = [](double v) { return format_double(v); };
  o << "[run]\n";
  if (cfg.command) o << "command = " << to_string(*cfg.command) << '\n';
  if (!cfg.input.empty()) {
    o << "input = " << std::filesystem::absolute(cfg.input).lexically_normal().string() << '\n';
  }
  if (!cfg.output.empty()) o << "output = " << cfg.output.string() << '\n';
  o << "seed = " << cfg.seed << "\n\n";

  o << "[grid]\n";
  o << "cells = " << join(cfg.grid.cells) << '\n';
  o << "levels = " << cfg.grid.levels << '\n';
  o << "domain_padding = " << num(cfg.grid.domain_padding) << '\n';
  o << "value_padding = " << num(cfg.grid.value_padding) << '\n';
  if (!cfg.grid.domain.empty()) {
    o << "domain = ";
    for (std::size_t j = 0; j < cfg.grid.domain.size(); ++j) {
      o << (j ? "," : "") << num(cfg.grid.domain[j].lo) << ':' << num(cfg.grid.domain[j].hi);
    }
    o << '\n';
  }
  o << '\n';

  o << "[estimator]\n";
  if (cfg.estimator.winsor_q) o << "winsor_q = " << num(*cfg.estimator.winsor_q) << '\n';
  o << "density = " << enum_name(cfg.estimator.density, kDensity) << "\n\n";

  const SolverConfig& sc = cfg.estimator.solver;
  o << "[solver]\n";
  o << "lambda = " << num(sc.lambda) << '\n';
  o << "nu = " << num(sc.nu) << '\n';
  o << "tol = " << num(sc.tol) << '\n';
  o << "max_iter = " << sc.max_iter << '\n';
  o << "check_every = " << sc.check_every << "\n\n";

  const SureConfig& su = cfg.sure;
  o << "[sure]\n";
  if (su.sigma) o << "sigma = " << num(*su.sigma) << '\n';
  o << "sigma_mode = " << enum_name(su.sigma_mode, kSigma) << '\n';
  o << "delta = " << num(su.delta) << '\n';
  o << "draws = " << su.r_draws << '\n';
  o << "lambda_min = " << num(su.lambda_range.lo) << '\n';
  o << "lambda_max = " << num(su.lambda_range.hi) << '\n';
  o << "nu_min = " << num(su.nu_range.lo) << '\n';
  o << "nu_max = " << num(su.nu_range.hi) << '\n';
  o << "n_lambda = " << su.n_lambda << '\n';
  o << "n_nu = " << su.n_nu << '\n';
  o << "log_uniform = " << (su.log_uniform ? "true" : "false") << "\n\n";

  const BandSettings& b = cfg.bands;
  o << "[bands]\n";
  o << "method = " << enum_name(b.method, kMethod) << '\n';
  o << "alpha = " << num(b.subsampling.alpha) << '\n';
  o << "reps = " << b.subsampling.j_reps << '\n';
  if (!b.subsampling.block_sizes.empty()) o << "sizes = " << join(b.subsampling.block_sizes) << '\n';
  std::vector<double> pairs;
  for (const auto& [s, t] : b.subsampling.quantile_pairs) {
    pairs.push_back(s);
    pairs.push_back(t);
  }
  o << "quantile_pairs = " << join(pairs) << '\n';
  o << "conformal_alpha = " << num(b.conformal_alpha) << "\n\n";

  const SimulateSettings& m = cfg.simulate;
  o << "[simulate]\n";
  o << "scenario = " << enum_name(m.scenario, kScenario) << '\n';
  o << "d = " << join(m.cohens_d) << '\n';
  o << "n = " << join(m.n) << '\n';
  o << "reps = " << m.reps << '\n';
  o << "sigma = " << num(m.sigma) << '\n';
  o << "base_sd = " << num(m.base_sd) << '\n';
  o << "radius = " << num(m.radius) << '\n';
  o << "steps = " << join(m.steps) << '\n';
  o << "cells_per_axis = " << m.cells_per_axis << '\n';
  o << "sure_cells_per_axis = " << m.sure_cells_per_axis << '\n';
  if (!m.lambda.empty()) o << "lambda = " << join(m.lambda) << '\n';
  if (!m.nu.empty()) o << "nu = " << join(m.nu) << '\n';
  return o.str();
}

void RunConfig::validate(Command cmd) const {
  if (command && *command != cmd) {
    bad("run.command", std::string("config is for '") + to_string(*command) + "', not '" +
                           to_string(cmd) + "'");
  }
  if (workers < 1) bad("run.workers", "must be at least 1");
  if (output.empty()) bad("run.output", "must not be empty");
  if (cmd != Command::Simulate && input.empty()) bad("run.input", "required for this command");
  if (grid.levels < 3) bad("grid.levels", "need at least 3 levels");
  for (std::size_t c : grid.cells) {
    if (c < 1) bad("grid.cells", "cell counts must be positive");
  }
  if (cmd != Command::Simulate && grid.cells.empty()) bad("grid.cells", "required");
  if (!(grid.domain_padding >= 0.0) || !(grid.value_padding >= 0.0)) {
    bad("grid", "padding must be nonnegative");
  }
  for (const auto& r : grid.domain) {
    if (!(r.hi > r.lo)) bad("grid.domain", "ranges need lo < hi");
  }
  if (estimator.winsor_q && !(*estimator.winsor_q > 0.0 && *estimator.winsor_q <= 1.0)) {
    bad("estimator.winsor_q", "must lie in (0, 1]");
  }
  estimator.solver.validate();
  if (cmd == Command::Sure || (cmd == Command::Simulate && simulate.lambda.empty())) {
    sure.validate();
  }
  if (cmd == Command::Bands) {
    const double a = bands.subsampling.alpha;
    if (!(a > 0.0 && a < 1.0)) bad("bands.alpha", "must lie in (0, 1)");
    if (!(bands.conformal_alpha > 0.0 && bands.conformal_alpha < 1.0)) {
      bad("bands.conformal_alpha", "must lie in (0, 1)");
    }
    if (bands.subsampling.j_reps < 2) bad("bands.reps", "need at least 2");
  }
  if (cmd == Command::Simulate) {
    const SimulateSettings& m = simulate;
    if (m.reps < 1) bad("simulate.reps", "need at least 1");
    if (m.n.empty()) bad("simulate.n", "need at least one sample size");
    if (m.scenario != ScenarioKind::Fig1 && m.cohens_d.empty()) bad("simulate.d", "need values");
    if (m.lambda.size() != m.nu.size()) bad("simulate.lambda", "lambda and nu lists differ in length");
    const std::size_t blocks = m.scenario == ScenarioKind::Fig1 ? 1 : m.cohens_d.size();
    if (!m.lambda.empty() && m.lambda.size() != blocks) {
      bad("simulate.lambda", "need one value per d-block");
    }
    if (m.cells_per_axis < 1 || m.sure_cells_per_axis < 1) bad("simulate", "cells must be positive");
    for (const auto& block : scenario_blocks()) {
      for (const auto& sc : block.rows) sc.validate();
    }
  }
}

std::vector<ScenarioBlock> RunConfig::scenario_blocks() const {
  const SimulateSettings& m = simulate;
  std::vector<ScenarioBlock> blocks;
  const auto make = [&](double d, std::size_t n) {
    Scenario sc;
    switch (m.scenario) {
      case ScenarioKind::Fig1:
        sc = fig1_scenario(n, 0);
        break;
      case ScenarioKind::Steps:
        sc.dim = 1;
        sc.cohens_d = d;
        sc.n = n;
        sc.step_locations = m.steps;
        break;
      case ScenarioKind::Circle:
        sc = circle_scenario(d, n, 0);
        break;
      case ScenarioKind::Sphere:
        sc = sphere_scenario(d, n, 0);
        break;
    }
    sc.sigma = m.sigma;
    sc.base_sd = m.base_sd;
    sc.radius = m.radius;
    return sc;
  };
  const std::vector<double> ds =
      m.scenario == ScenarioKind::Fig1 ? std::vector<double>{0.0} : m.cohens_d;
  for (std::size_t b = 0; b < ds.size(); ++b) {
    ScenarioBlock block;
    for (std::size_t n : m.n) block.rows.push_back(make(ds[b], n));
    if (b < m.lambda.size()) {
      block.lambda = m.lambda[b];
      block.nu = m.nu[b];
    }
    blocks.push_back(std::move(block));
  }
  return blocks;
}

}  // namespace fdr
