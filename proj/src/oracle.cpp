#include "tvanish/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "tvanish/errors.hpp"
#include "tvanish/format.hpp"

namespace tvanish {

namespace {

constexpr double kEnumerationGuard = 1e6;
constexpr int kRandomPieces = 8;

void validate_box(const StateBox& box, int state_dim) {
  if (state_dim > 3) throw DimensionError("dp_value supports state_dim <= 3");
  if (box.lo.size() != state_dim || box.hi.size() != state_dim)
    throw DimensionError("state box dimension does not match the problem");
  for (int i = 0; i < state_dim; ++i)
    if (!std::isfinite(box.lo[i]) || !std::isfinite(box.hi[i]) || !(box.lo[i] < box.hi[i]))
      throw DimensionError("state box needs finite lo < hi on every axis");
}

void check_candidate(const Trajectory& traj, double T, const StateBox& box) {
  for (std::size_t k = 0; k < traj.size() && traj.grid[k] <= T * (1 + 1e-12); ++k)
    for (Eigen::Index i = 0; i < box.lo.size(); ++i) {
      const double x = traj.x[k][i];
      const double slack = 1e-9 * (1.0 + std::abs(x));
      if (x < box.lo[i] - slack || x > box.hi[i] + slack)
        throw DimensionError("candidate state x" + std::to_string(i + 1) + " = " + format_double(x) + " at t = " +
                             format_double(traj.grid[k]) + " leaves the oracle state box");
    }
}

struct Lattice {
  const std::vector<std::vector<double>>* axes;
  std::vector<std::size_t> stride;

  explicit Lattice(const std::vector<std::vector<double>>& a) : axes(&a), stride(a.size(), 1) {
    for (std::size_t i = a.size(); i-- > 1;) stride[i - 1] = stride[i] * a[i].size();
  }

  std::size_t count() const { return stride.front() * axes->front().size(); }

  Vec node(std::size_t idx) const {
    Vec x(static_cast<Eigen::Index>(axes->size()));
    for (std::size_t i = 0; i < axes->size(); ++i) {
      x[static_cast<Eigen::Index>(i)] = (*axes)[i][idx / stride[i]];
      idx %= stride[i];
    }
    return x;
  }

  /// Returns true if any coordinate had to be clamped.
  bool interpolate(const std::vector<double>& table, const Vec& x, double& out) const {
    const std::size_t d = axes->size();
    std::size_t base[3];
    double w[3];
    bool clamped = false;
    for (std::size_t i = 0; i < d; ++i) {
      const auto& ax = (*axes)[i];
      const double lo = ax.front(), hi = ax.back();
      double xi = x[static_cast<Eigen::Index>(i)];
      if (xi < lo || xi > hi) {
        clamped = true;
        xi = std::clamp(xi, lo, hi);
      }
      const double gap = (hi - lo) / static_cast<double>(ax.size() - 1);
      std::size_t c = static_cast<std::size_t>(std::floor((xi - lo) / gap));
      c = std::min(c, ax.size() - 2);
      base[i] = c;
      w[i] = std::clamp((xi - ax[c]) / gap, 0.0, 1.0);
    }
    double v = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
      double weight = 1.0;
      std::size_t idx = 0;
      for (std::size_t i = 0; i < d; ++i) {
        const bool up = (corner >> i) & 1;
        weight *= up ? w[i] : 1.0 - w[i];
        idx += (base[i] + (up ? 1 : 0)) * stride[i];
      }
      if (weight != 0.0) v += weight * table[idx];
    }
    out = v;
    return clamped;
  }
};

double max_gap(const ValueGrid& vg) {
  double gap = 0.0;
  for (const auto& ax : vg.axes) gap = std::max(gap, (ax.back() - ax.front()) / static_cast<double>(ax.size() - 1));
  return gap;
}

double lipschitz_estimate(const ControlProblem& p, const ValueGrid& vg) {
  const Lattice lat(vg.axes);
  const std::size_t n = lat.count();
  const std::size_t stride = std::max<std::size_t>(1, n / 512);
  double L = 0.0;
  for (std::size_t idx = 0; idx < n; idx += stride) {
    const Vec x = lat.node(idx);
    for (const Vec& u : vg.controls) {
      const double fx = p.eval_f_x(0.0, x, u).cwiseAbs().rowwise().sum().maxCoeff();
      const double gx = p.eval_g_x(0.0, x, u).cwiseAbs().maxCoeff();
      L = std::max(L, fx + gx);
    }
  }
  return L;
}

std::vector<double> equal_breakpoints(double T, int pieces) {
  std::vector<double> bp;
  for (int k = 0; k < pieces; ++k) bp.push_back(T * k / pieces);
  return bp;
}

Vec random_control_value(const ControlSet& set, std::mt19937_64& rng) {
  if (set.is_box()) {
    const auto& b = set.as_box();
    Vec v(b.lo.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = std::uniform_real_distribution<double>(b.lo[i], b.hi[i])(rng);
    return v;
  }
  const auto& pts = set.as_finite().points;
  return pts[std::uniform_int_distribution<std::size_t>(0, pts.size() - 1)(rng)];
}

}  // namespace

std::size_t ValueGrid::node_count() const { return Lattice(axes).count(); }

double ValueGrid::value(std::size_t k, const Vec& x) const {
  if (k >= V.size()) throw DimensionError("value layer out of range");
  if (x.size() != static_cast<Eigen::Index>(axes.size())) throw DimensionError("state dimension mismatch");
  double v = 0.0;
  Lattice(axes).interpolate(V[k], x, v);
  return v;
}

ValueGrid dp_value(const ControlProblem& p, double T, const StateBox& box, int nodes_per_axis, double dt,
                   int control_grid_n, const Trajectory* candidate) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DimensionError("dt must be positive");
  if (!(T >= 0.0) || !std::isfinite(T)) throw DimensionError("horizon must be nonnegative");
  if (nodes_per_axis < 2) throw DimensionError("nodes_per_axis must be at least 2");
  const int d = p.state_dim();
  validate_box(box, d);
  if (candidate) check_candidate(*candidate, T, box);

  ValueGrid vg;
  vg.horizon = T;
  vg.steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
  vg.dt = vg.steps == 0 ? dt : T / static_cast<double>(vg.steps);
  for (int i = 0; i < d; ++i) {
    std::vector<double> ax(static_cast<std::size_t>(nodes_per_axis));
    for (int j = 0; j < nodes_per_axis; ++j)
      ax[static_cast<std::size_t>(j)] =
          j + 1 == nodes_per_axis ? box.hi[i] : box.lo[i] + (box.hi[i] - box.lo[i]) * j / (nodes_per_axis - 1);
    vg.axes.push_back(std::move(ax));
  }
  vg.controls = sample_control_grid(p.control_set(), control_grid_n);

  const Lattice lat(vg.axes);
  const std::size_t n = lat.count();
  if (static_cast<double>(n) * static_cast<double>(vg.steps + 1) > 5e7)
    throw DimensionError("value table of " + std::to_string(n) + " nodes x " + std::to_string(vg.steps + 1) +
                         " layers is too large");
  std::vector<Vec> nodes;
  nodes.reserve(n);
  for (std::size_t idx = 0; idx < n; ++idx) nodes.push_back(lat.node(idx));

  vg.V.assign(vg.steps + 1, std::vector<double>());
  vg.policy.assign(vg.steps, std::vector<std::uint32_t>(n, 0));
  vg.V[vg.steps].assign(n, 0.0);
  for (std::size_t k = vg.steps; k-- > 0;) {
    const double t = static_cast<double>(k) * vg.dt;
    const std::vector<double>& next = vg.V[k + 1];
    std::vector<double>& cur = vg.V[k];
    cur.assign(n, 0.0);
    for (std::size_t idx = 0; idx < n; ++idx) {
      const Vec& x = nodes[idx];
      double best = -std::numeric_limits<double>::infinity();
      std::uint32_t arg = 0;
      for (std::size_t c = 0; c < vg.controls.size(); ++c) {
        const Vec& u = vg.controls[c];
        double tail = 0.0;
        double reward = 0.0;
        try {
          const Vec xn = x + p.eval_f(t, x, u) * vg.dt;
          reward = p.eval_g(t, x, u) * vg.dt;
          if (lat.interpolate(next, xn, tail)) ++vg.clamp_count;
        } catch (const EvalError& e) {
          throw NumericalError(std::string("dp_value: ") + e.what(), t);
        }
        const double v = reward + tail;
        if (v > best) {
          best = v;
          arg = static_cast<std::uint32_t>(c);
        }
      }
      if (!std::isfinite(best)) throw NumericalError("dp_value: non-finite value", t);
      cur[idx] = best;
      vg.policy[k][idx] = arg;
    }
  }
  return vg;
}

BruteForceResult brute_force_controls(const ControlProblem& p, double T, int pieces, int control_grid_n,
                                      double step) {
  if (pieces < 1) throw DimensionError("pieces must be at least 1");
  if (!(T > 0.0)) throw DimensionError("horizon must be positive");
  const std::vector<Vec> grid = sample_control_grid(p.control_set(), control_grid_n);
  const double total = std::pow(static_cast<double>(grid.size()), pieces);
  if (total > kEnumerationGuard)
    throw DimensionError("brute force would enumerate " + format_double(total) + " controls (limit 1e6)");

  const std::vector<double> bp = equal_breakpoints(T, pieces);
  std::vector<std::size_t> digits(static_cast<std::size_t>(pieces), 0);
  std::optional<BruteForceResult> best;
  std::size_t evaluated = 0;
  for (;;) {
    std::vector<Vec> values;
    for (std::size_t dgt : digits) values.push_back(grid[dgt]);
    ControlSignal u(bp, std::move(values));
    const Trajectory tr = integrate_state(p, u, T, step);
    ++evaluated;
    if (!best || tr.J.back() > best->best_J) best = BruteForceResult{tr.J.back(), std::move(u), 0};
    std::size_t pos = digits.size();
    while (pos > 0 && ++digits[pos - 1] == grid.size()) digits[--pos] = 0;
    if (pos == 0) break;
  }
  best->evaluated = evaluated;
  return *best;
}

OracleReport strong_optimality_test(const ControlProblem& p, const ControlSignal& u0, const TauSequence& tau,
                                    const OracleOptions& opts) {
  const Trajectory cand = integrate_state(p, u0, tau.back(), opts.step, tau.values());
  const int coarse_nodes = (opts.nodes_per_axis + 1) / 2;
  const std::size_t grid_size = sample_control_grid(p.control_set(), opts.control_grid_n).size();
  const bool brute =
      opts.pieces > 0 && std::pow(static_cast<double>(grid_size), opts.pieces) <= kEnumerationGuard;
  std::mt19937_64 rng(opts.seed);

  OracleReport report;
  for (std::size_t n = 0; n < tau.size(); ++n) {
    const double T = tau[n];
    MarginRow row{};
    row.tau = T;
    row.J_candidate = cand.J[cand.index_of(T)];

    const ValueGrid fine = dp_value(p, T, opts.box, opts.nodes_per_axis, opts.dt, opts.control_grid_n, &cand);
    const ValueGrid coarse = dp_value(p, T, opts.box, coarse_nodes, 2 * opts.dt, opts.control_grid_n);
    row.V_dp = fine.value(0, p.x_init());
    row.V_dp_coarse = coarse.value(0, p.x_init());
    row.clamp_count = fine.clamp_count;
    row.tolerance = 2 * std::abs(row.V_dp - row.V_dp_coarse) + 1e-6 * (1 + std::abs(row.V_dp));
    row.lipschitz_budget = 5 * (fine.dt + max_gap(fine)) * lipschitz_estimate(p, fine);

    row.V_oracle = row.V_dp;
    if (brute) {
      row.V_brute = brute_force_controls(p, T, opts.pieces, opts.control_grid_n, opts.step).best_J;
      row.V_oracle = std::max(row.V_oracle, *row.V_brute);
    }
    for (int r = 0; r < opts.random_controls; ++r) {
      std::vector<Vec> values;
      for (int k = 0; k < kRandomPieces; ++k) values.push_back(random_control_value(p.control_set(), rng));
      const double J = integrate_state(p, ControlSignal(equal_breakpoints(T, kRandomPieces), std::move(values)), T,
                                       opts.step)
                           .J.back();
      row.V_random = row.V_random ? std::max(*row.V_random, J) : J;
    }
    if (row.V_random) row.V_oracle = std::max(row.V_oracle, *row.V_random);

    row.margin = row.J_candidate - row.V_oracle;
    row.pass = row.margin >= -row.tolerance;
    report.pass = report.pass && row.pass;
    report.rows.push_back(std::move(row));
  }
  return report;
}

void write_margins_csv(std::ostream& out, const OracleReport& report) {
  out << "tau,J_candidate,V_oracle,margin,tolerance,verdict\n";
  for (const MarginRow& r : report.rows)
    out << format_double(r.tau) << ',' << format_double(r.J_candidate) << ',' << format_double(r.V_oracle) << ','
        << format_double(r.margin) << ',' << format_double(r.tolerance) << ',' << (r.pass ? "PASS" : "FAIL") << '\n';
}

}  // namespace tvanish
