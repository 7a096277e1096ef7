#include <CLI11.hpp>

#include <iostream>

#include "fdr/app.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Free discontinuity regression"};
  std::string command;
  std::string config;
  fdr::Overrides overrides;
  std::string out;
  std::uint64_t seed = 0;
  int workers = 1;
  app.add_option("command", command, "fit, sure, bands or simulate")
      ->required()
      ->check(CLI::IsMember({"fit", "sure", "bands", "simulate"}));
  app.add_option("--config", config, "INI run configuration")->required();
  auto* out_opt = app.add_option("--out", out, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "random seed");
  auto* workers_opt =
      app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : fdr::kExitConfig;
  }
  if (*out_opt) overrides.output = out;
  if (*seed_opt) overrides.seed = seed;
  if (*workers_opt) overrides.workers = workers;
  return fdr::run_cli(*fdr::parse_command(command), config, overrides, std::cerr);
}
