#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tvanish/halkin.hpp"
#include "tvanish/oracle.hpp"
#include "tvanish/pmp.hpp"
#include "tvanish/problem.hpp"
#include "tvanish/vanish.hpp"

namespace tvanish {

struct SolverConfig {
  double step = 1e-3;
  std::optional<double> horizon;
  int control_grid_n = 11;
  double window = 1e-2;
  /// Residual tolerance for the verify checks.
  double tolerance = 1e-6;
  std::size_t stride = 10;
  ClassifyOptions classify;
  std::vector<double> compacts;
  /// Right end of the improper adjoint integral; defaults to the horizon.
  std::optional<double> improper_tail;
  std::vector<double> improper_at{0.0};
};

struct OracleConfig {
  std::optional<StateBox> state_box;
  int nodes_per_axis = 201;
  double dt = 1e-3;
  int pieces = 0;
  int random_controls = 0;
  /// Control lattice for the DP and brute force; defaults to solver.control_grid_n.
  std::optional<int> control_grid_n;
  /// Horizons for the oracle; defaults to the run's tau sequence.
  std::optional<TauSequence> tau;
};

/// Textual form of QuadStructure.
struct StructureConfig {
  std::string g1;
  std::string r;
  std::optional<std::vector<std::string>> f1;
  std::optional<std::vector<std::vector<std::string>>> S;

  QuadStructure build() const;
};

struct RunConfig {
  ProblemDefinition problem;
  std::optional<ControlSignal> candidate;
  std::optional<TauSequence> tau;
  SolverConfig solver;
  OracleConfig oracle;
  std::optional<StructureConfig> structure;
  bool assume_strictly_convex = false;
  std::uint64_t seed = 0;

  /// solver.horizon, else the last tau value. Throws ConfigError if neither
  /// is set or the horizon is shorter than the tau sequence.
  double horizon() const;
  const ControlSignal& require_candidate() const;
  const TauSequence& require_tau() const;
};

/// YAML run description; see README.md for the schema. Throws ConfigError
/// on malformed YAML, unknown keys, missing keys or inconsistent sizes.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Ready-to-run configuration for the Halkin example with u = alpha.
std::string halkin_config(const HalkinParams& params);

}  // namespace tvanish
