#pragma once

// Run configuration: an INI file with [run], [grid], [estimator], [solver],
// [sure], [bands] and [simulate] sections. Unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fdr/estimator.hpp"
#include "fdr/inference.hpp"
#include "fdr/simulate.hpp"
#include "fdr/sure.hpp"

namespace fdr {

enum class Command { Fit, Sure, Bands, Simulate };

const char* to_string(Command c) noexcept;
std::optional<Command> parse_command(const std::string& name);

struct GridSettings {
  std::vector<std::size_t> cells;  // one entry broadcasts to every axis
  std::size_t levels = 32;
  double domain_padding = 0.0;
  double value_padding = 0.05;
  std::vector<Range> domain;  // empty: fitted to the cloud

  std::vector<std::size_t> resolved_cells(std::size_t dim) const;
};

enum class BandMethod { Subsampling, Conformal, Both };

struct BandSettings {
  BandMethod method = BandMethod::Subsampling;
  SubsamplingConfig subsampling;
  double conformal_alpha = 0.1;
};

enum class ScenarioKind { Fig1, Steps, Circle, Sphere };

struct SimulateSettings {
  ScenarioKind scenario = ScenarioKind::Circle;
  std::vector<double> cohens_d{0.25, 0.5, 0.75};
  std::vector<std::size_t> n{1000, 5000, 10000};
  std::size_t reps = 20;
  double sigma = 0.05;
  double base_sd = 0.0;
  double radius = 0.0;
  std::vector<double> steps{0.5};  // 1D step locations for `steps`
  std::size_t cells_per_axis = 20;
  std::size_t sure_cells_per_axis = 20;
  std::vector<double> lambda;  // one per d-block; empty: SURE per block
  std::vector<double> nu;
};

struct RunConfig {
  std::optional<Command> command;
  std::filesystem::path input;
  std::filesystem::path output = "fdr_out";
  std::uint64_t seed = 0;
  int workers = 1;
  GridSettings grid;
  EstimatorSettings estimator;
  SureConfig sure;
  BandSettings bands;
  SimulateSettings simulate;

  // Checks everything the given command uses; throws InvalidConfig.
  void validate(Command cmd) const;
  // Blocks for run_monte_carlo built from the [simulate] section.
  std::vector<ScenarioBlock> scenario_blocks() const;
};

// Relative input paths resolve against `base_dir`.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

// Canonical INI text of every setting; parse_config(to_ini(c)) == c.
// The worker count is left out because it never changes results; an
// empty output path is left out as well.
std::string to_ini(const RunConfig& cfg);

}  // namespace fdr
