#include "tvanish/integrate.hpp"

#include <algorithm>
#include <cmath>

#include "tvanish/format.hpp"

namespace tvanish {

std::optional<std::size_t> Trajectory::find(double t) const {
  auto it = std::lower_bound(grid.begin(), grid.end(), t);
  const double tol = 1e-10 * std::max(1.0, std::abs(t));
  std::optional<std::size_t> best;
  if (it != grid.end() && std::abs(*it - t) <= tol) best = static_cast<std::size_t>(it - grid.begin());
  if (it != grid.begin() && std::abs(*(it - 1) - t) <= tol) {
    const auto k = static_cast<std::size_t>(it - grid.begin()) - 1;
    if (!best || std::abs(grid[k] - t) < std::abs(grid[*best] - t)) best = k;
  }
  return best;
}

std::size_t Trajectory::index_of(double t) const {
  if (auto k = find(t)) return *k;
  throw DimensionError("time " + format_double(t) + " is not a trajectory grid point");
}

namespace {

template <class T>
T interpolate(const std::vector<double>& grid, const std::vector<T>& values, double t) {
  if (t <= grid.front()) return values.front();
  if (t >= grid.back()) return values.back();
  auto it = std::upper_bound(grid.begin(), grid.end(), t);
  const auto k = static_cast<std::size_t>(it - grid.begin());
  const double w = (t - grid[k - 1]) / (grid[k] - grid[k - 1]);
  return (1.0 - w) * values[k - 1] + w * values[k];
}

}  // namespace

Vec Trajectory::state_at(double t) const { return interpolate(grid, x, t); }

Vec Trajectory::gradient_integral_at(double t) const { return interpolate(grid, I, t); }

namespace {

std::vector<double> build_grid(const ControlSignal& u, double T, double step, std::span<const double> mandatory) {
  std::vector<double> knots{0.0, T};
  for (double b : u.breakpoints())
    if (b > 0.0 && b < T) knots.push_back(b);
  for (double m : mandatory) {
    if (!std::isfinite(m)) throw DimensionError("mandatory grid point must be finite");
    if (m > 0.0 && m < T) knots.push_back(m);
    if (m > T * (1 + 1e-12)) throw DimensionError("mandatory grid point " + format_double(m) + " beyond horizon");
  }
  std::sort(knots.begin(), knots.end());
  std::vector<double> merged;
  for (double k : knots) {
    if (merged.empty() || k - merged.back() > 1e-12 * std::max(1.0, std::abs(k))) {
      merged.push_back(k);
    } else if (k == T) {
      merged.back() = T;
    }
  }

  std::vector<double> grid{0.0};
  for (std::size_t i = 1; i < merged.size(); ++i) {
    const double a = merged[i - 1];
    const double b = merged[i];
    const auto n = static_cast<long>(std::max(1.0, std::ceil((b - a) / step - 1e-9)));
    for (long k = 1; k < n; ++k) grid.push_back(a + (b - a) * static_cast<double>(k) / static_cast<double>(n));
    grid.push_back(b);
  }
  return grid;
}

// Augmented state y = (x, vec(A), J, I), A stored column-major.
class Augmented {
 public:
  Augmented(const ControlProblem& p) : p_(p), d_(p.state_dim()) {}

  Eigen::Index size() const { return d_ + d_ * d_ + 1 + d_; }

  Vec pack(const Vec& x, const Mat& A, double J, const Vec& I) const {
    Vec y(size());
    y.head(d_) = x;
    y.segment(d_, d_ * d_) = Eigen::Map<const Vec>(A.data(), d_ * d_);
    y[d_ + d_ * d_] = J;
    y.tail(d_) = I;
    return y;
  }

  Vec x(const Vec& y) const { return y.head(d_); }
  Mat A(const Vec& y) const { return Eigen::Map<const Mat>(y.data() + d_, d_, d_); }
  double J(const Vec& y) const { return y[d_ + d_ * d_]; }
  Vec I(const Vec& y) const { return y.tail(d_); }

  Vec derivative(double t, const Vec& y, const Vec& u) const {
    const Vec x = y.head(d_);
    const Eigen::Map<const Mat> A(y.data() + d_, d_, d_);
    Vec dy(size());
    try {
      const Mat fx = p_.eval_f_x(t, x, u);
      dy.head(d_) = p_.eval_f(t, x, u);
      const Mat dA = fx * A;
      dy.segment(d_, d_ * d_) = Eigen::Map<const Vec>(dA.data(), d_ * d_);
      dy[d_ + d_ * d_] = p_.eval_g(t, x, u);
      dy.tail(d_) = A.transpose() * p_.eval_g_x(t, x, u);
    } catch (const EvalError& e) {
      throw NumericalError(std::string("non-finite derivative (") + e.what() + ")", t);
    }
    if (!dy.allFinite()) throw NumericalError("non-finite derivative", t);
    return dy;
  }

 private:
  const ControlProblem& p_;
  int d_;
};

}  // namespace

Trajectory integrate_state(const ControlProblem& p, const ControlSignal& u, double T, double step,
                           std::span<const double> mandatory) {
  if (!(T > 0.0) || !std::isfinite(T)) throw DimensionError("horizon must be positive and finite");
  if (!(step > 0.0)) throw DimensionError("step must be positive");
  if (u.dim() != p.control_dim()) throw DimensionError("control signal dimension differs from the problem");

  const int d = p.state_dim();
  const Augmented aug(p);
  Trajectory traj;
  traj.grid = build_grid(u, T, step, mandatory);
  traj.control = u;
  const std::size_t n = traj.grid.size();
  traj.x.reserve(n);
  traj.A.reserve(n);
  traj.J.reserve(n);
  traj.I.reserve(n);

  Vec y = aug.pack(p.x_init(), Mat::Identity(d, d), 0.0, Vec::Zero(d));
  auto record = [&](double t) {
    Vec x = aug.x(y);
    if (!x.allFinite() || x.norm() > kStateCeiling)
      throw NumericalError("state norm exceeded " + format_double(kStateCeiling) + " (blow-up)", t);
    Mat A = aug.A(y);
    if (!(std::abs(A.determinant()) >= kDetFloor)) throw NumericalError("singular fundamental matrix", t);
    traj.x.push_back(std::move(x));
    traj.A.push_back(std::move(A));
    traj.J.push_back(aug.J(y));
    traj.I.push_back(aug.I(y));
  };
  record(0.0);

  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double t = traj.grid[k];
    const double h = traj.grid[k + 1] - t;
    const Vec& uk = u.at(t);  // constant on [t_k, t_{k+1})
    const Vec k1 = aug.derivative(t, y, uk);
    const Vec k2 = aug.derivative(t + h / 2, y + (h / 2) * k1, uk);
    const Vec k3 = aug.derivative(t + h / 2, y + (h / 2) * k2, uk);
    const Vec k4 = aug.derivative(t + h, y + h * k3, uk);
    y += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    record(traj.grid[k + 1]);
  }
  return traj;
}

MultiplierArc integrate_adjoint_backward(const ControlProblem& p, const Trajectory& traj,
                                         const ControlSignal& u, double lambda, const Vec& psi_end,
                                         double t_lo, double t_hi) {
  const int d = p.state_dim();
  if (psi_end.size() != d) throw DimensionError("terminal adjoint has wrong dimension");
  if (!psi_end.allFinite()) throw DimensionError("terminal adjoint must be finite");
  const std::size_t lo = traj.index_of(t_lo);
  const std::size_t hi = traj.index_of(t_hi);
  if (lo > hi) throw DimensionError("adjoint interval is reversed");

  MultiplierArc arc;
  arc.lambda = lambda;
  arc.grid.assign(traj.grid.begin() + static_cast<long>(lo), traj.grid.begin() + static_cast<long>(hi) + 1);
  arc.psi.resize(hi - lo + 1);
  arc.psi.back() = psi_end;

  Vec psi = psi_end;
  for (std::size_t k = hi; k > lo; --k) {
    const double t1 = traj.grid[k];
    const double t0 = traj.grid[k - 1];
    const double h = t1 - t0;
    const double tm = 0.5 * (t0 + t1);
    const Vec& uk = u.at(t0);
    const Vec xm = 0.5 * (traj.x[k - 1] + traj.x[k]);

    Mat fx1, fxm, fx0;
    Vec gx1, gxm, gx0;
    try {
      fx1 = p.eval_f_x(t1, traj.x[k], uk);
      fxm = p.eval_f_x(tm, xm, uk);
      fx0 = p.eval_f_x(t0, traj.x[k - 1], uk);
      gx1 = p.eval_g_x(t1, traj.x[k], uk);
      gxm = p.eval_g_x(tm, xm, uk);
      gx0 = p.eval_g_x(t0, traj.x[k - 1], uk);
    } catch (const EvalError& e) {
      throw NumericalError(std::string("non-finite adjoint coefficient (") + e.what() + ")", t0);
    }
    auto rhs = [&](const Mat& fx, const Vec& gx, const Vec& ps) -> Vec {
      return -(fx.transpose() * ps + lambda * gx);
    };
    // integrate from t1 down to t0 (step -h)
    const Vec k1 = rhs(fx1, gx1, psi);
    const Vec k2 = rhs(fxm, gxm, psi - (h / 2) * k1);
    const Vec k3 = rhs(fxm, gxm, psi - (h / 2) * k2);
    const Vec k4 = rhs(fx0, gx0, psi - h * k3);
    psi -= (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    if (!psi.allFinite()) throw NumericalError("adjoint blow-up", t0);
    arc.psi[k - 1 - lo] = psi;
  }
  return arc;
}

Vec row_times_inverse(const Mat& A, const Vec& v, double t) {
  if (!(std::abs(A.determinant()) >= kDetFloor)) throw NumericalError("singular fundamental matrix", t);
  return A.transpose().partialPivLu().solve(v);
}

MultiplierArc adjoint_via_cauchy(const Trajectory& traj, double lambda, const Vec& psi_0) {
  if (psi_0.size() != traj.state_dim()) throw DimensionError("initial adjoint has wrong dimension");
  MultiplierArc arc;
  arc.lambda = lambda;
  arc.grid = traj.grid;
  arc.psi.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k)
    arc.psi.push_back(row_times_inverse(traj.A[k], psi_0 - lambda * traj.I[k], traj.grid[k]));
  return arc;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const int d = traj.state_dim();
  out << "t";
  for (int i = 1; i <= d; ++i) out << ",x" << i;
  out << ",J";
  for (int i = 1; i <= d; ++i) out << ",I" << i;
  for (int i = 1; i <= d; ++i)
    for (int j = 1; j <= d; ++j) out << ",A" << i << j;
  out << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << format_double(traj.grid[k]);
    for (int i = 0; i < d; ++i) out << ',' << format_double(traj.x[k][i]);
    out << ',' << format_double(traj.J[k]);
    for (int i = 0; i < d; ++i) out << ',' << format_double(traj.I[k][i]);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out << ',' << format_double(traj.A[k](i, j));
    out << '\n';
  }
}

}  // namespace tvanish
