#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "tvanish/expr.hpp"

namespace tvanish {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Compact, time-invariant set of admissible control values.
class ControlSet {
 public:
  struct Box {
    Vec lo;
    Vec hi;
  };
  struct Finite {
    std::vector<Vec> points;
  };

  /// Throws DimensionError unless lo <= hi componentwise and both are finite.
  static ControlSet box(Vec lo, Vec hi);
  /// Throws DimensionError if `points` is empty or ragged.
  static ControlSet finite(std::vector<Vec> points);

  int dim() const;
  bool is_box() const { return std::holds_alternative<Box>(data_); }
  const Box& as_box() const { return std::get<Box>(data_); }
  const Finite& as_finite() const { return std::get<Finite>(data_); }

  /// Box: lo - tol <= u <= hi + tol. Finite: some member within `tol`
  /// in the max norm.
  bool contains(const Vec& u, double tol = 1e-12) const;

 private:
  explicit ControlSet(std::variant<Box, Finite> data) : data_(std::move(data)) {}
  std::variant<Box, Finite> data_;
};

/// Box lattice with `n_per_axis` uniform points per axis (all corners
/// included, first axis varies slowest; degenerate axes contribute one
/// value), or the finite set itself in its declared order.
std::vector<Vec> sample_control_grid(const ControlSet& set, int n_per_axis);

/// Piecewise-constant control: values[i] holds on [breakpoints[i],
/// breakpoints[i+1]) and the last value is held forever.
class ControlSignal {
 public:
  ControlSignal(std::vector<double> breakpoints, std::vector<Vec> values);
  static ControlSignal constant(Vec value);

  const Vec& at(double t) const;
  /// u(t - 0); equals at(t) away from breakpoints. For t <= 0 returns the
  /// first value.
  const Vec& left_limit(double t) const;

  int dim() const { return static_cast<int>(values_.front().size()); }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<Vec>& values() const { return values_; }

  /// Throws DimensionError if a value lies outside `set` (tolerance 1e-12).
  void check_admissible(const ControlSet& set) const;

 private:
  std::vector<double> breakpoints_;
  std::vector<Vec> values_;
};

/// Textual problem description, as read from a run configuration.
struct ProblemDefinition {
  int state_dim = 0;
  int control_dim = 0;
  std::vector<std::string> f;
  std::string g;
  std::vector<double> x_init;
  std::optional<double> growth_bound;
  std::optional<ControlSet> control_set;
};

/// Infinite-horizon problem: maximize the integral of g along
/// x' = f(t, x, u), x(0) = x_init, u in the control set. Holds the
/// symbolic x-partials of f and g. Immutable after construction.
class ControlProblem {
 public:
  /// Validates dimensions and differentiates f and g with respect to each
  /// state. Throws DimensionError or DiffError.
  static ControlProblem from_exprs(std::vector<Expr> f, Expr g, ControlSet control_set, Vec x_init,
                                   std::optional<double> growth_bound = std::nullopt);

  int state_dim() const { return static_cast<int>(f_.size()); }
  int control_dim() const { return control_set_.dim(); }
  const std::vector<Expr>& f() const { return f_; }
  const Expr& g() const { return g_; }
  /// f_x()[i][j] = d f_i / d x_j.
  const std::vector<std::vector<Expr>>& f_x() const { return f_x_; }
  const std::vector<Expr>& g_x() const { return g_x_; }
  const ControlSet& control_set() const { return control_set_; }
  const Vec& x_init() const { return x_init_; }
  const std::optional<double>& growth_bound() const { return growth_bound_; }

  Vec eval_f(double t, const Vec& x, const Vec& u) const;
  double eval_g(double t, const Vec& x, const Vec& u) const;
  Mat eval_f_x(double t, const Vec& x, const Vec& u) const;
  Vec eval_g_x(double t, const Vec& x, const Vec& u) const;

 private:
  ControlProblem(std::vector<Expr> f, Expr g, ControlSet control_set, Vec x_init,
                 std::optional<double> growth_bound);

  std::vector<Expr> f_;
  Expr g_;
  std::vector<std::vector<Expr>> f_x_;
  std::vector<Expr> g_x_;
  ControlSet control_set_;
  Vec x_init_;
  std::optional<double> growth_bound_;
};

/// Parses and validates a textual definition. Throws ParseError,
/// DimensionError or DiffError.
ControlProblem build_problem(const ProblemDefinition& def);

struct GrowthViolation {
  double t = 0.0;
  Vec x;
  Vec u;
  double ratio = 0.0;
};

struct GrowthReport {
  double estimated_M = 0.0;
  std::vector<GrowthViolation> violations;  // first 100 only
  int violation_count = 0;
};

/// Samples (t, x, u) on a Halton sequence over [0, t_max] x box x U (plus
/// the box corners for box control sets) and reports the largest
/// |f| / (1 + |x|) together with every sample that exceeds the declared
/// growth bound. A check, not a proof.
GrowthReport validate_growth(const ControlProblem& p, const Vec& x_lo, const Vec& x_hi, double t_max,
                             int samples);

}  // namespace tvanish
