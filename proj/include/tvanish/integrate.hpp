#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "tvanish/problem.hpp"

namespace tvanish {

/// |det A| below this is treated as a singular fundamental matrix.
inline constexpr double kDetFloor = 1e-300;
/// |x| above this aborts integration as a blow-up.
inline constexpr double kStateCeiling = 1e12;

/// Forward solution on a fixed grid: the state x, the fundamental matrix A
/// (A' = f_x A, A(0) = E), the accumulated reward J and the gradient
/// integral I(T) = int_0^T g_x A dt, stored as a column vector.
struct Trajectory {
  std::vector<double> grid;
  std::vector<Vec> x;
  std::vector<Mat> A;
  std::vector<double> J;
  std::vector<Vec> I;
  std::optional<ControlSignal> control;

  std::size_t size() const { return grid.size(); }
  int state_dim() const { return static_cast<int>(x.front().size()); }
  double horizon() const { return grid.back(); }

  /// Index of the grid point equal to `t` (relative tolerance 1e-10), if any.
  std::optional<std::size_t> find(double t) const;
  /// As find(), but throws DimensionError when `t` is not a grid point.
  std::size_t index_of(double t) const;

  /// Linear interpolation of x and I; `t` is clamped to the grid.
  Vec state_at(double t) const;
  Vec gradient_integral_at(double t) const;
};

/// A multiplier pair (lambda, psi(.)) sampled on a grid. psi is stored as a
/// column vector; the pairing with f is psi . f.
struct MultiplierArc {
  double lambda = 0.0;
  std::vector<double> grid;
  std::vector<Vec> psi;
};

/// Classical RK4 with at most `step` per substep, jointly advancing
/// (x, A, J, I). Control breakpoints inside (0, T) and every `mandatory`
/// time inside (0, T] become grid points. Throws NumericalError on
/// |x| > kStateCeiling, a non-finite derivative, or |det A| < kDetFloor.
Trajectory integrate_state(const ControlProblem& p, const ControlSignal& u, double T, double step,
                           std::span<const double> mandatory = {});

/// Solves psi' = -(f_x^T psi + lambda g_x) backward from psi(t_hi) = psi_end
/// to t_lo along the trajectory grid, both ends being grid points. States
/// between grid points are linearly interpolated.
MultiplierArc integrate_adjoint_backward(const ControlProblem& p, const Trajectory& traj,
                                         const ControlSignal& u, double lambda, const Vec& psi_end,
                                         double t_lo, double t_hi);

/// psi(t) = (psi(0) - lambda I(t)) A^{-1}(t) at every grid point.
MultiplierArc adjoint_via_cauchy(const Trajectory& traj, double lambda, const Vec& psi_0);

/// Row vector v times A^{-1}, returned as a column (solves A^T y = v by LU
/// with partial pivoting). Throws NumericalError if |det A| < kDetFloor;
/// `t` only labels the error.
Vec row_times_inverse(const Mat& A, const Vec& v, double t = 0.0);

/// CSV with header t,x1..xd,J,I1..Id,A11..Add (A row-major).
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace tvanish
