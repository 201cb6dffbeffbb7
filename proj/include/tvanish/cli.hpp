#pragma once

#include <ostream>

#include "tvanish/config.hpp"

namespace tvanish {

/// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNumerical = 2, kExitVerifyFail = 3 };

/// Trajectory CSV up to the run horizon.
void run_simulate(const RunConfig& cfg, std::ostream& csv);

/// Certificate JSON; the convergence table goes to `convergence_csv` if given.
void run_vanish(const RunConfig& cfg, std::ostream& json, std::ostream* convergence_csv = nullptr);

/// Condition report JSON. Returns the verdict.
bool run_verify(const RunConfig& cfg, std::ostream& json);

/// Margins CSV. Returns the verdict.
bool run_oracle(const RunConfig& cfg, std::ostream& csv);

/// tvanish simulate|vanish|verify|oracle CONFIG [--out DIR] [--step H]
/// [--horizon T], or tvanish halkin --alpha A --beta B --x0 X [--out DIR].
/// Without --out the main output goes to `out`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tvanish
