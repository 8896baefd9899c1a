#include <hetsync/app/runner.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace hetsync::app;

  CLI::App app{"Synchronization design and simulation for heterogeneous discrete-time agents"};
  app.require_subcommand(1);

  CommonOptions common;
  std::uint64_t seed = 0;
  std::size_t horizon = 0;
  std::vector<double> rates;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--horizon", horizon, "Override the config horizon");
    sub->add_option("--rates", rates, "Comma-separated ratio rates")->delimiter(',');
    sub->add_option("--out", common.out, "Output directory");
  };
  CLI::App* analyze = app.add_subcommand("analyze", "Check assumptions and design the protocol");
  add_common(analyze);
  CLI::App* simulate = app.add_subcommand("simulate", "Design, simulate and write CSV data");
  add_common(simulate);

  SuiteOptions suite;
  long long trials = 100;
  CLI::App* dsuite = app.add_subcommand("decouple-suite", "Random decoupling trials");
  dsuite->add_option("--seed", suite.seed, "Base seed");
  dsuite->add_option("--trials", trials, "Number of trials");
  dsuite->add_option("--horizon", suite.horizon, "Steps per trial");
  dsuite->add_option("--out", suite.out, "Output directory");
  dsuite->add_flag("--with-negative-control", suite.negative_control,
                   "Append a trial that violates the hypothesis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  auto finish_common = [&](CLI::App* sub) {
    if (sub->count("--seed") > 0) common.seed = seed;
    if (sub->count("--horizon") > 0) common.horizon = horizon;
    if (sub->count("--rates") > 0) common.rates = rates;
  };
  if (analyze->parsed()) {
    finish_common(analyze);
    return cmd_analyze(common, std::cout, std::cerr);
  }
  if (simulate->parsed()) {
    finish_common(simulate);
    return cmd_simulate(common, std::cout, std::cerr);
  }
  if (trials < 1) {
    std::cerr << "config error: --trials must be at least 1\n";
    return exit_config;
  }
  suite.trials = static_cast<std::size_t>(trials);
  return cmd_decouple_suite(suite, std::cout, std::cerr);
}
