#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tvanish/integrate.hpp"
#include "tvanish/vanish.hpp"

namespace tvanish {

/// One verified condition. `extra` carries check-specific scalars.
struct CheckEntry {
  std::string name;
  bool pass = false;
  std::vector<double> residuals;
  std::vector<double> locations;
  double tolerance = 0.0;
  /// Entries that are not enforced are reported but do not affect the verdict.
  bool enforced = true;
  std::vector<std::pair<std::string, double>> extra;
  std::string note;
};

struct ConditionReport {
  std::vector<CheckEntry> entries;
  bool passed() const;
};

/// psi . f + lambda g. Throws EvalError on a non-finite result.
double hamiltonian(const ControlProblem& p, double t, const Vec& x, const Vec& u, double lambda, const Vec& psi);

struct HamiltonianMax {
  double value;
  Vec argmax;
  /// L * gap summed over axes, L from lattice-neighbour slopes; 0 for finite sets.
  double discretization_bound;
};

/// Lattice search over sample_control_grid (first maximum wins), followed
/// for boxes by three rounds of golden-section refinement per axis inside
/// the neighbouring lattice cells. A refined point replaces the lattice
/// maximum only if strictly better.
HamiltonianMax max_hamiltonian(const ControlProblem& p, double t, const Vec& x, double lambda, const Vec& psi,
                               int grid_n);

struct MaxResidual {
  std::vector<double> times;
  std::vector<double> profile;
  double sup = 0.0;
  double sup_time = 0.0;
  double discretization_bound = 0.0;
};

/// profile[k] = sup_p H(p) - H(u(t_k)) along the arc, with the candidate
/// itself among the competitors so that profile >= 0. The arc grid must be
/// a contiguous run of trajectory grid points. At the last arc point the
/// control's left limit is used. `stride` thins the evaluated points (the
/// last point is always kept).
MaxResidual maximum_residual(const ControlProblem& p, const Trajectory& traj, const ControlSignal& u,
                             const MultiplierArc& arc, int grid_n, std::size_t stride = 1);

struct EndpointGain {
  double residual;
  double half_window;
};

/// Average of sup_p [g(t, x, p) - g(t, x, u(t))] over [tau_n - window, tau_n)
/// and over the half window, by a 32-point midpoint rule. Exactly 0 when g
/// does not involve the control.
EndpointGain endpoint_gain_residual(const ControlProblem& p, const Trajectory& traj, const ControlSignal& u,
                                    double tau_n, double window, int grid_n);

enum class NormalizationMode { Dob, DobKK };

/// Dob: lambda = 1, or lambda = 0 and |psi(0)| = 1. DobKK: |psi(0)| + lambda = 1.
CheckEntry check_normalization(double lambda, const Vec& psi_init, NormalizationMode mode);
CheckEntry check_normalization(const MultiplierArc& arc, NormalizationMode mode);

/// Residuals |psi_0(tau'_n)| along the certificate subsequence. Passes when
/// lambda_0 >= 1e-6 and the residuals are within `tol` from some index on,
/// where that index (the reported prefix) lies in the first half.
CheckEntry check_strict_convexity_consequence(const VanishingCertificate& cert, double tol);

/// Declared decomposition g = g1 - r |u|^2, optionally f = f1 + S u.
struct QuadStructure {
  Expr g1;
  Expr r;
  std::optional<std::vector<Expr>> f1;
  std::optional<std::vector<std::vector<Expr>>> S;  // state_dim x control_dim
};

/// Checks the structure against p at 50 seeded sample points (StructureError
/// on a mismatch above 1e-9 (1 + |value|) or a non-positive r), then tests
/// |u(tau_n - 0)| <= tol and, when S is declared, |psi_0(tau_n) S(tau_n)| <= tol
/// and lambda_0 >= 1e-6. Prefix rule as for the strict convexity check.
CheckEntry check_quadratic_control_remarks(const ControlProblem& p, const ControlSignal& u,
                                           const VanishingCertificate& cert, const TauSequence& tau,
                                           const QuadStructure& structure, double tol);

/// Length of the shortest prefix after which every residual is <= tol.
std::size_t violating_prefix(const std::vector<double>& residuals, double tol);

}  // namespace tvanish
