#pragma once

// Command implementations behind the `fdr` executable.

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "fdr/config.hpp"
#include "fdr/error.hpp"

namespace fdr {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitIo = 3, kExitSolver = 4 };

int exit_code_for(ErrorCode code) noexcept;

struct Overrides {
  std::optional<std::filesystem::path> output;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

void apply_overrides(RunConfig& cfg, const Overrides& o);

// Runs one command and writes its artifacts plus manifest.ini and
// manifest.json into cfg.output. Warnings go to `log`. Throws Error.
void run_command(Command cmd, const RunConfig& cfg, std::ostream& log);

// Loads the config, applies overrides, runs, and maps errors to exit codes.
int run_cli(Command cmd, const std::filesystem::path& config_path, const Overrides& o,
            std::ostream& log);

}  // namespace fdr
