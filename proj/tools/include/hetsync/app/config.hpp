#pragma once

#include <hetsync/graph.hpp>
#include <hetsync/types.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hetsync::app {

// Malformed or dimensionally inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string name = "run";
  std::optional<Matrix> adjacency;
  std::vector<Edge> edges;  // used when adjacency is absent
  std::size_t n_nodes = 0;
  std::vector<Matrix> s_init;
  Vector input;
  std::size_t horizon = 100;
  std::uint64_t seed = 0;
  std::optional<double> coupling;
  std::optional<double> eta;
  std::optional<Matrix> riccati_P;
  std::vector<double> rates{0.9, 0.8, 0.7};
  std::optional<std::vector<Vector>> xi_init;
  std::optional<std::pair<std::size_t, std::size_t>> rate_window;

  std::size_t agents() const { return s_init.size(); }
  Eigen::Index dim() const { return input.size(); }
  WeightedGraph graph() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError on any inconsistency between fields.
void validate(const RunConfig& config);

}  // namespace hetsync::app
