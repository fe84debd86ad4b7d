#include "arbor/experiments.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <iostream>
#include <optional>

namespace {

constexpr int kExitChecksFailed = 2;
constexpr int kExitUsage = 1;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Arboreal gas experiments: exact enumeration, Grassmann integrals, mean-field quadrature and Monte Carlo"};
  app.footer(arbor::experiment_help() +
             "\nExit status: 0 when every check passes, 2 when a check fails, 1 on usage or configuration errors.");
  std::optional<std::string> experiment, config_path, out;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  app.add_option("-e,--experiment", experiment, "Experiment to run (overrides the config file)");
  app.add_option("-c,--config", config_path, "Config file with key = value lines")->check(CLI::ExistingFile);
  app.add_option("-s,--seed", seed, "Base seed (overrides the config file)");
  app.add_option("-o,--out", out, "Output directory (overrides the config file)");
  app.add_option("-j,--threads", threads, "OpenMP threads for the Monte Carlo chains (0 = runtime default)")
      ->check(CLI::NonNegativeNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    arbor::ExperimentConfig cfg =
        config_path ? arbor::parse_config_file(*config_path, experiment.has_value()) : arbor::ExperimentConfig{};
    if (experiment) cfg.experiment = *experiment;
    if (seed) cfg.seed = *seed;
    if (out) cfg.out = *out;
    if (cfg.experiment.empty()) throw arbor::ConfigError(0, "no experiment given (use --experiment or a config file)");
    if (threads > 0) omp_set_num_threads(threads);

    const auto table = arbor::run_experiment(cfg);
    for (const auto& path : arbor::write_outputs(table, cfg.out)) std::cout << "wrote " << path << '\n';
    for (const auto& w : table.warnings) std::cerr << "warning: " << w << '\n';
    for (int c : table.criteria())
      std::cout << "criterion " << c << ": " << (table.criterion_pass(c) ? "pass" : "FAIL") << '\n';
    std::cout << table.experiment << ": " << table.n_checked() << " checks, " << table.n_failed() << " failed ("
              << table.wall_seconds << " s)\n";
    return table.all_pass() ? 0 : kExitChecksFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
