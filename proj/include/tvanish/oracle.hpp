#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "tvanish/integrate.hpp"
#include "tvanish/vanish.hpp"

namespace tvanish {

struct StateBox {
  Vec lo;
  Vec hi;
};

/// Reward-to-go on a uniform state lattice at times k dt, k = 0..steps.
struct ValueGrid {
  double horizon = 0.0;
  double dt = 0.0;
  std::size_t steps = 0;
  std::vector<std::vector<double>> axes;
  std::vector<Vec> controls;
  /// V[k][node], nodes ordered with the first axis varying slowest.
  std::vector<std::vector<double>> V;
  /// Greedy control index per layer 0..steps-1 and node.
  std::vector<std::vector<std::uint32_t>> policy;
  /// Transitions that left the box and were clamped back.
  std::size_t clamp_count = 0;

  std::size_t node_count() const;
  /// Multilinear interpolation in layer k; `x` is clamped to the box.
  double value(std::size_t k, const Vec& x) const;
};

/// Backward recursion V(t, x) = max_u [g dt + V(t + dt, x + f dt)] with
/// V(T, .) = 0, explicit Euler transitions and multilinear interpolation.
/// dt is shrunk so that T is a whole number of steps. If `candidate` is
/// given, its states on [0, T] must lie in the box (DimensionError otherwise).
ValueGrid dp_value(const ControlProblem& p, double T, const StateBox& box, int nodes_per_axis, double dt,
                   int control_grid_n, const Trajectory* candidate = nullptr);

struct BruteForceResult {
  double best_J;
  ControlSignal best_control;
  std::size_t evaluated;
};

/// Every control with `pieces` equal constant pieces on [0, T] taking
/// values in sample_control_grid(set, control_grid_n), integrated by RK4.
/// The first maximizer in enumeration order wins. Throws DimensionError if
/// more than 1e6 controls would be enumerated.
BruteForceResult brute_force_controls(const ControlProblem& p, double T, int pieces, int control_grid_n, double step);

struct OracleOptions {
  StateBox box;
  int nodes_per_axis = 201;
  double dt = 1e-3;
  int control_grid_n = 11;
  /// 0 disables brute force; it is also skipped beyond the enumeration guard.
  int pieces = 0;
  double step = 1e-3;
  /// Random piecewise-constant controls (8 pieces) added to the comparison.
  int random_controls = 0;
  std::uint64_t seed = 0;
};

struct MarginRow {
  double tau;
  double J_candidate;
  double V_dp;
  double V_dp_coarse;
  std::optional<double> V_brute;
  std::optional<double> V_random;
  double V_oracle;
  double margin;
  /// 2 |V_dp - V_dp_coarse| + 1e-6 (1 + |V_dp|).
  double tolerance;
  /// 5 (dt + max gap) L with L from sampled |f_x|, |g_x| (reported only).
  double lipschitz_budget;
  std::size_t clamp_count;
  bool pass;
};

struct OracleReport {
  std::vector<MarginRow> rows;
  bool pass = true;
};

/// Margins J[u0](tau_n) - V_oracle(tau_n), V_oracle being the largest of the
/// DP value, the brute-force optimum and the best random control. The DP tolerance compares a run at
/// (dt, nodes) with one at (2 dt, (nodes + 1) / 2).
OracleReport strong_optimality_test(const ControlProblem& p, const ControlSignal& u0, const TauSequence& tau,
                                    const OracleOptions& opts);

/// CSV with header tau,J_candidate,V_oracle,margin,tolerance,verdict.
void write_margins_csv(std::ostream& out, const OracleReport& report);

}  // namespace tvanish
