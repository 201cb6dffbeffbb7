#include "tvanish/problem.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace tvanish {

// ---------------------------------------------------------------------------
// ControlSet

ControlSet ControlSet::box(Vec lo, Vec hi) {
  if (lo.size() == 0 || lo.size() != hi.size())
    throw DimensionError("control box bounds must be nonempty and of equal length");
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]))
      throw DimensionError("control box bounds must be finite");
    if (lo[i] > hi[i])
      throw DimensionError("control box has lo > hi on axis " + std::to_string(i + 1));
  }
  return ControlSet(Box{std::move(lo), std::move(hi)});
}

ControlSet ControlSet::finite(std::vector<Vec> points) {
  if (points.empty()) throw DimensionError("finite control set must be nonempty");
  const auto dim = points.front().size();
  if (dim == 0) throw DimensionError("finite control set points must be nonempty vectors");
  for (const auto& p : points) {
    if (p.size() != dim) throw DimensionError("finite control set points have inconsistent lengths");
    if (!p.allFinite()) throw DimensionError("finite control set points must be finite");
  }
  return ControlSet(Finite{std::move(points)});
}

int ControlSet::dim() const {
  if (is_box()) return static_cast<int>(as_box().lo.size());
  return static_cast<int>(as_finite().points.front().size());
}

bool ControlSet::contains(const Vec& u, double tol) const {
  if (u.size() != dim()) return false;
  if (is_box()) {
    const auto& b = as_box();
    return ((u - b.lo).array() >= -tol).all() && ((b.hi - u).array() >= -tol).all();
  }
  return std::any_of(as_finite().points.begin(), as_finite().points.end(),
                     [&](const Vec& p) { return (p - u).lpNorm<Eigen::Infinity>() <= tol; });
}

std::vector<Vec> sample_control_grid(const ControlSet& set, int n_per_axis) {
  if (!set.is_box()) return set.as_finite().points;
  if (n_per_axis < 2) throw DimensionError("control grid needs at least 2 points per axis");

  const auto& box = set.as_box();
  const int m = set.dim();
  std::vector<std::vector<double>> axes(m);
  for (int i = 0; i < m; ++i) {
    if (box.lo[i] == box.hi[i]) {
      axes[i] = {box.lo[i]};
      continue;
    }
    axes[i].resize(n_per_axis);
    for (int k = 0; k < n_per_axis; ++k) {
      const double s = static_cast<double>(k) / (n_per_axis - 1);
      axes[i][k] = k == n_per_axis - 1 ? box.hi[i] : box.lo[i] + s * (box.hi[i] - box.lo[i]);
    }
  }

  std::size_t total = 1;
  for (const auto& a : axes) total *= a.size();
  std::vector<Vec> out;
  out.reserve(total);
  std::vector<std::size_t> idx(m, 0);
  for (std::size_t n = 0; n < total; ++n) {
    Vec p(m);
    for (int i = 0; i < m; ++i) p[i] = axes[i][idx[i]];
    out.push_back(std::move(p));
    for (int i = m - 1; i >= 0; --i) {
      if (++idx[i] < axes[i].size()) break;
      idx[i] = 0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// ControlSignal

ControlSignal::ControlSignal(std::vector<double> breakpoints, std::vector<Vec> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (breakpoints_.empty() || breakpoints_.size() != values_.size())
    throw DimensionError("control signal needs one value per breakpoint");
  if (breakpoints_.front() != 0.0) throw DimensionError("control signal breakpoints must start at 0");
  for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
    if (!(breakpoints_[i] > breakpoints_[i - 1]) || !std::isfinite(breakpoints_[i]))
      throw DimensionError("control signal breakpoints must be strictly increasing");
  }
  const auto dim = values_.front().size();
  for (const auto& v : values_) {
    if (v.size() != dim || dim == 0) throw DimensionError("control signal values have inconsistent lengths");
    if (!v.allFinite()) throw DimensionError("control signal values must be finite");
  }
}

ControlSignal ControlSignal::constant(Vec value) { return ControlSignal({0.0}, {std::move(value)}); }

const Vec& ControlSignal::at(double t) const {
  // last breakpoint <= t
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  if (it == breakpoints_.begin()) return values_.front();
  return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

const Vec& ControlSignal::left_limit(double t) const {
  // last breakpoint < t
  auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t);
  if (it == breakpoints_.begin()) return values_.front();
  return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

void ControlSignal::check_admissible(const ControlSet& set) const {
  if (dim() != set.dim()) throw DimensionError("control signal dimension differs from the control set");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!set.contains(values_[i]))
      throw DimensionError("control value on interval starting at t=" + std::to_string(breakpoints_[i]) +
                           " lies outside the control set");
  }
}

// ---------------------------------------------------------------------------
// ControlProblem

ControlProblem::ControlProblem(std::vector<Expr> f, Expr g, ControlSet control_set, Vec x_init,
                               std::optional<double> growth_bound)
    : f_(std::move(f)),
      g_(std::move(g)),
      control_set_(std::move(control_set)),
      x_init_(std::move(x_init)),
      growth_bound_(growth_bound) {
  const int d = state_dim();
  f_x_.resize(d);
  for (int i = 0; i < d; ++i) {
    f_x_[i].reserve(d);
    for (int j = 0; j < d; ++j) f_x_[i].push_back(differentiate(f_[i], {VarKind::State, j}));
  }
  g_x_.reserve(d);
  for (int j = 0; j < d; ++j) g_x_.push_back(differentiate(g_, {VarKind::State, j}));
}

ControlProblem ControlProblem::from_exprs(std::vector<Expr> f, Expr g, ControlSet control_set, Vec x_init,
                                          std::optional<double> growth_bound) {
  const int d = static_cast<int>(f.size());
  const int m = control_set.dim();
  if (d == 0) throw DimensionError("state dimension must be positive");
  if (x_init.size() != d)
    throw DimensionError("x_init has length " + std::to_string(x_init.size()) + ", expected " +
                         std::to_string(d));
  if (!x_init.allFinite()) throw DimensionError("x_init must be finite");
  auto check = [&](const Expr& e, const std::string& what) {
    if (max_index(e, VarKind::State) > d)
      throw DimensionError(what + " references x" + std::to_string(max_index(e, VarKind::State)) +
                           " but state_dim is " + std::to_string(d));
    if (max_index(e, VarKind::Control) > m)
      throw DimensionError(what + " references u" + std::to_string(max_index(e, VarKind::Control)) +
                           " but control_dim is " + std::to_string(m));
  };
  for (int i = 0; i < d; ++i) check(f[i], "f[" + std::to_string(i + 1) + "]");
  check(g, "g");
  if (growth_bound && !(*growth_bound >= 0.0)) throw DimensionError("growth bound must be nonnegative");
  return ControlProblem(std::move(f), std::move(g), std::move(control_set), std::move(x_init), growth_bound);
}

namespace {

Point point(double t, const Vec& x, const Vec& u) {
  return {t, {x.data(), static_cast<std::size_t>(x.size())}, {u.data(), static_cast<std::size_t>(u.size())}};
}

}  // namespace

Vec ControlProblem::eval_f(double t, const Vec& x, const Vec& u) const {
  const Point at = point(t, x, u);
  Vec out(state_dim());
  for (int i = 0; i < state_dim(); ++i) out[i] = evaluate(f_[i], at);
  return out;
}

double ControlProblem::eval_g(double t, const Vec& x, const Vec& u) const {
  return evaluate(g_, point(t, x, u));
}

Mat ControlProblem::eval_f_x(double t, const Vec& x, const Vec& u) const {
  const Point at = point(t, x, u);
  const int d = state_dim();
  Mat out(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = evaluate(f_x_[i][j], at);
  return out;
}

Vec ControlProblem::eval_g_x(double t, const Vec& x, const Vec& u) const {
  const Point at = point(t, x, u);
  Vec out(state_dim());
  for (int j = 0; j < state_dim(); ++j) out[j] = evaluate(g_x_[j], at);
  return out;
}

ControlProblem build_problem(const ProblemDefinition& def) {
  if (def.state_dim <= 0) throw DimensionError("state_dim must be positive");
  if (def.control_dim <= 0) throw DimensionError("control_dim must be positive");
  if (static_cast<int>(def.f.size()) != def.state_dim)
    throw DimensionError("f has " + std::to_string(def.f.size()) + " components, expected " +
                         std::to_string(def.state_dim));
  if (!def.control_set) throw DimensionError("control set is missing");
  if (def.control_set->dim() != def.control_dim)
    throw DimensionError("control set dimension " + std::to_string(def.control_set->dim()) +
                         " differs from control_dim " + std::to_string(def.control_dim));

  std::vector<Expr> f;
  f.reserve(def.f.size());
  for (const auto& text : def.f) f.push_back(parse(text));
  Vec x_init = Eigen::Map<const Vec>(def.x_init.data(), static_cast<Eigen::Index>(def.x_init.size()));
  return ControlProblem::from_exprs(std::move(f), parse(def.g), *def.control_set, std::move(x_init),
                                    def.growth_bound);
}

// ---------------------------------------------------------------------------
// Growth validation

namespace {

constexpr std::array<int, 24> kPrimes = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,
                                         41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};

double radical_inverse(int base, long index) {
  double inv = 1.0 / base;
  double scale = inv;
  double out = 0.0;
  while (index > 0) {
    out += static_cast<double>(index % base) * scale;
    index /= base;
    scale *= inv;
  }
  return out;
}

}  // namespace

GrowthReport validate_growth(const ControlProblem& p, const Vec& x_lo, const Vec& x_hi, double t_max,
                             int samples) {
  const int d = p.state_dim();
  if (samples < 1) throw DimensionError("samples must be >= 1");
  if (x_lo.size() != d || x_hi.size() != d) throw DimensionError("state box has wrong dimension");

  const ControlSet& U = p.control_set();
  const int u_dims = U.is_box() ? U.dim() : 1;
  if (1 + d + u_dims > static_cast<int>(kPrimes.size()))
    throw DimensionError("too many dimensions for growth sampling");

  GrowthReport report;
  auto record = [&](double t, const Vec& x, const Vec& u) {
    const double ratio = p.eval_f(t, x, u).norm() / (1.0 + x.norm());
    report.estimated_M = std::max(report.estimated_M, ratio);
    if (p.growth_bound() && ratio > *p.growth_bound() * (1.0 + 1e-12)) {
      ++report.violation_count;
      if (report.violations.size() < 100) report.violations.push_back({t, x, u, ratio});
    }
  };

  Vec x(d);
  Vec u(U.dim());

  // Box corners at both ends of the time range, when there are few enough.
  if (U.is_box() && d + U.dim() <= 10) {
    const auto& b = U.as_box();
    const int n_axes = d + U.dim();
    for (double t : {0.0, t_max}) {
      for (long mask = 0; mask < (1L << n_axes); ++mask) {
        for (int i = 0; i < d; ++i) x[i] = (mask >> i) & 1 ? x_hi[i] : x_lo[i];
        for (int i = 0; i < U.dim(); ++i) u[i] = (mask >> (d + i)) & 1 ? b.hi[i] : b.lo[i];
        record(t, x, u);
      }
    }
  }

  for (long n = 0; n < samples; ++n) {
    // index 0 is the all-lower corner; later indices fill the box
    int axis = 0;
    const double t = t_max * radical_inverse(kPrimes[axis++], n);
    for (int i = 0; i < d; ++i) x[i] = x_lo[i] + radical_inverse(kPrimes[axis++], n) * (x_hi[i] - x_lo[i]);
    if (U.is_box()) {
      const auto& b = U.as_box();
      for (int i = 0; i < U.dim(); ++i) u[i] = b.lo[i] + radical_inverse(kPrimes[axis++], n) * (b.hi[i] - b.lo[i]);
    } else {
      const auto& pts = U.as_finite().points;
      auto k = static_cast<std::size_t>(radical_inverse(kPrimes[axis++], n) * static_cast<double>(pts.size()));
      u = pts[std::min(k, pts.size() - 1)];
    }
    record(t, x, u);
  }
  return report;
}

}  // namespace tvanish
