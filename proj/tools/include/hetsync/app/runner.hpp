#pragma once

#include <hetsync/app/config.hpp>
#include <hetsync/decoupling.hpp>
#include <hetsync/protocol.hpp>
#include <hetsync/simulator.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace hetsync::app {

enum ExitCode : int {
  exit_ok = 0,
  exit_trial_failed = 1,
  exit_assumption = 2,
  exit_numerical = 3,
  exit_config = 4,
};

struct Analysis {
  LaplacianSpectrum spectrum;
  AssumptionReport assumptions;
  ProtocolDesign design;
};

Analysis analyze(const RunConfig& config);

/// Seeded uniform [-1, 1] draw, agent by agent, unless xi_init is given.
std::vector<Vector> initial_states(const RunConfig& config);

struct SimulationResult {
  Analysis analysis;
  Trajectory trajectory;
  std::vector<Vector> initial;
};

SimulationResult run_simulation(const RunConfig& config);

/// Ordered JSON text; identical input gives identical bytes.
std::string analysis_report(const RunConfig& config, const Analysis& analysis);
std::string simulation_report(const RunConfig& config, const SimulationResult& result);

/// t, sync_error, dyn_dev, dev_agent_1..N
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
/// t, then x_<i>_<k> for every agent and component, then dev_<i>_<k> = x_<i>_<k> - mean_k
void write_components_csv(std::ostream& out, const Trajectory& traj);
/// t, value, ratio_r<r>
void write_ratio_csv(std::ostream& out, const std::vector<double>& series, double r);
/// seed, rho_As, rho_Astar, kappa, r_tested, sup_ratio, passed
void write_suite_csv(std::ostream& out, const std::vector<TrialOutcome>& rows);

/// Formats r for file names and headers: shortest of %g that round-trips.
std::string rate_label(double r);

// Subcommands. Each returns an ExitCode and reports problems on err.
struct CommonOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> horizon;
  std::optional<std::vector<double>> rates;
  std::filesystem::path out = ".";
};

int cmd_analyze(const CommonOptions& options, std::ostream& out, std::ostream& err);
int cmd_simulate(const CommonOptions& options, std::ostream& out, std::ostream& err);

struct SuiteOptions {
  std::uint64_t seed = 42;
  std::size_t trials = 100;
  std::size_t horizon = 300;
  bool negative_control = false;
  std::filesystem::path out = ".";
};

int cmd_decouple_suite(const SuiteOptions& options, std::ostream& out, std::ostream& err);

}  // namespace hetsync::app
