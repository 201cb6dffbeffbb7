#include "tvanish/pmp.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tvanish/format.hpp"

namespace tvanish {

bool ConditionReport::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const CheckEntry& e) { return e.pass || !e.enforced; });
}

double hamiltonian(const ControlProblem& p, double t, const Vec& x, const Vec& u, double lambda, const Vec& psi) {
  if (psi.size() != p.state_dim()) throw DimensionError("adjoint has wrong dimension");
  const double h = psi.dot(p.eval_f(t, x, u)) + lambda * p.eval_g(t, x, u);
  if (!std::isfinite(h)) throw EvalError("non-finite Hamiltonian at t=" + format_double(t));
  return h;
}

namespace {

constexpr double kGolden = 0.6180339887498949;

// Maximizes phi on [a, b] assuming unimodality; returns the best probe.
template <class F>
std::pair<double, double> golden_max(F&& phi, double a, double b, int iterations) {
  double c = b - kGolden * (b - a);
  double d = a + kGolden * (b - a);
  double fc = phi(c), fd = phi(d);
  for (int i = 0; i < iterations; ++i) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = phi(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = phi(d);
    }
  }
  return fc >= fd ? std::make_pair(c, fc) : std::make_pair(d, fd);
}

}  // namespace

HamiltonianMax max_hamiltonian(const ControlProblem& p, double t, const Vec& x, double lambda, const Vec& psi,
                               int grid_n) {
  const ControlSet& set = p.control_set();
  const std::vector<Vec> lattice = sample_control_grid(set, grid_n);
  std::vector<double> values(lattice.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    values[i] = hamiltonian(p, t, x, lattice[i], lambda, psi);
    if (values[i] > values[best]) best = i;
  }
  HamiltonianMax out{values[best], lattice[best], 0.0};
  if (!set.is_box()) return out;

  const auto& box = set.as_box();
  const int m = static_cast<int>(box.lo.size());
  std::vector<std::size_t> count(m), stride(m);
  std::vector<double> gap(m);
  for (int a = 0; a < m; ++a) {
    const bool flat = box.lo[a] == box.hi[a];
    count[a] = flat ? 1 : static_cast<std::size_t>(grid_n);
    gap[a] = flat ? 0.0 : (box.hi[a] - box.lo[a]) / (grid_n - 1);
  }
  std::size_t s = 1;
  for (int a = m - 1; a >= 0; --a) {
    stride[a] = s;
    s *= count[a];
  }
  for (int a = 0; a < m; ++a) {
    if (count[a] == 1) continue;
    double slope = 0.0;
    for (std::size_t i = 0; i < lattice.size(); ++i)
      if ((i / stride[a]) % count[a] + 1 < count[a])
        slope = std::max(slope, std::abs(values[i + stride[a]] - values[i]) / gap[a]);
    out.discretization_bound += slope * gap[a];
  }

  Vec current = out.argmax;
  double current_value = out.value;
  for (int round = 0; round < 3; ++round) {
    for (int a = 0; a < m; ++a) {
      if (count[a] == 1) continue;
      const double lo = std::max(box.lo[a], current[a] - gap[a]);
      const double hi = std::min(box.hi[a], current[a] + gap[a]);
      Vec probe = current;
      auto phi = [&](double v) {
        probe[a] = v;
        return hamiltonian(p, t, x, probe, lambda, psi);
      };
      const auto [arg, val] = golden_max(phi, lo, hi, 40);
      if (val > current_value) {
        current[a] = arg;
        current_value = val;
      }
    }
  }
  if (current_value > out.value) {
    out.value = current_value;
    out.argmax = current;
  }
  return out;
}

MaxResidual maximum_residual(const ControlProblem& p, const Trajectory& traj, const ControlSignal& u,
                             const MultiplierArc& arc, int grid_n, std::size_t stride) {
  if (arc.grid.empty() || arc.grid.size() != arc.psi.size()) throw DimensionError("malformed multiplier arc");
  if (stride == 0) throw DimensionError("stride must be positive");
  const auto first = traj.find(arc.grid.front());
  if (!first || *first + arc.grid.size() > traj.size())
    throw DimensionError("multiplier arc grid does not match the trajectory grid");
  const std::size_t offset = *first;
  for (std::size_t k = 0; k < arc.grid.size(); ++k)
    if (std::abs(arc.grid[k] - traj.grid[offset + k]) > 1e-10 * std::max(1.0, std::abs(arc.grid[k])))
      throw DimensionError("multiplier arc grid does not match the trajectory grid");

  MaxResidual out;
  const std::size_t last = arc.grid.size() - 1;
  for (std::size_t k = 0; k <= last; k = (k == last ? last + 1 : std::min(k + stride, last))) {
    const double t = arc.grid[k];
    const Vec& x = traj.x[offset + k];
    const Vec& uk = (k == last && k > 0) ? u.left_limit(t) : u.at(t);
    const HamiltonianMax best = max_hamiltonian(p, t, x, arc.lambda, arc.psi[k], grid_n);
    const double h = hamiltonian(p, t, x, uk, arc.lambda, arc.psi[k]);
    const double r = std::max(best.value, h) - h;
    out.times.push_back(t);
    out.profile.push_back(r);
    out.discretization_bound = std::max(out.discretization_bound, best.discretization_bound);
    if (out.profile.size() == 1 || r > out.sup) {
      out.sup = r;
      out.sup_time = t;
    }
  }
  return out;
}

EndpointGain endpoint_gain_residual(const ControlProblem& p, const Trajectory& traj, const ControlSignal& u,
                                    double tau_n, double window, int grid_n) {
  if (!(window > 0.0) || !(window < tau_n)) throw DimensionError("window must satisfy 0 < window < tau_n");
  traj.index_of(tau_n);
  if (!depends_on(p.g(), VarKind::Control)) return {0.0, 0.0};

  const Vec zero = Vec::Zero(p.state_dim());
  auto average = [&](double w) {
    constexpr int kSamples = 32;
    double sum = 0.0;
    for (int j = 0; j < kSamples; ++j) {
      const double s = tau_n - w + (j + 0.5) * w / kSamples;
      const Vec x = traj.state_at(s);
      const double best = max_hamiltonian(p, s, x, 1.0, zero, grid_n).value;
      sum += std::max(0.0, best - p.eval_g(s, x, u.at(s)));
    }
    return sum / kSamples;
  };
  return {average(window), average(window / 2)};
}

CheckEntry check_normalization(double lambda, const Vec& psi_init, NormalizationMode mode) {
  CheckEntry e;
  e.tolerance = 1e-9;
  const double norm = psi_init.norm();
  double r;
  if (mode == NormalizationMode::Dob) {
    e.name = "normalization_dob";
    r = std::min(std::abs(lambda - 1.0), std::abs(lambda) + std::abs(norm - 1.0));
  } else {
    e.name = "normalization_dob_kk";
    r = std::abs(norm + lambda - 1.0);
  }
  e.residuals = {r};
  e.pass = r <= e.tolerance;
  return e;
}

CheckEntry check_normalization(const MultiplierArc& arc, NormalizationMode mode) {
  if (arc.psi.empty()) throw DimensionError("empty multiplier arc");
  return check_normalization(arc.lambda, arc.psi.front(), mode);
}

std::size_t violating_prefix(const std::vector<double>& residuals, double tol) {
  std::size_t prefix = residuals.size();
  while (prefix > 0 && residuals[prefix - 1] <= tol) --prefix;
  return prefix;
}

namespace {

bool prefix_acceptable(std::size_t prefix, std::size_t n) { return n > 0 && prefix <= n / 2; }

}  // namespace

CheckEntry check_strict_convexity_consequence(const VanishingCertificate& cert, double tol) {
  CheckEntry e;
  e.name = "strict_convexity_consequence";
  e.tolerance = tol;
  if (!cert.determined()) {
    e.pass = false;
    e.note = "certificate undetermined";
    return e;
  }
  for (std::size_t n : cert.subsequence) {
    e.residuals.push_back(cert.psi0_at_tau.at(n).norm());
    e.locations.push_back(cert.per_n.at(n).tau);
  }
  const std::size_t prefix = violating_prefix(e.residuals, tol);
  e.extra = {{"prefix", static_cast<double>(prefix)}, {"lambda0", cert.lambda0}};
  e.pass = cert.lambda0 >= 1e-6 && prefix_acceptable(prefix, e.residuals.size());
  if (cert.lambda0 < 1e-6) e.note = "abnormal certificate (lambda0 = 0)";
  return e;
}

namespace {

Point at(double t, const Vec& x, const Vec& u) {
  return {t, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
          std::span<const double>(u.data(), static_cast<std::size_t>(u.size()))};
}

void verify_structure(const ControlProblem& p, const QuadStructure& s, double t_max) {
  const int d = p.state_dim();
  const int m = p.control_dim();
  if (s.f1.has_value() != s.S.has_value()) throw StructureError("f1 and S must be declared together");
  if (s.f1 && static_cast<int>(s.f1->size()) != d) throw StructureError("f1 has wrong dimension");
  if (s.S) {
    if (static_cast<int>(s.S->size()) != d) throw StructureError("S has wrong row count");
    for (const auto& row : *s.S) {
      if (static_cast<int>(row.size()) != m) throw StructureError("S has wrong column count");
      for (const Expr& e : row)
        if (depends_on(e, VarKind::State) || depends_on(e, VarKind::Control))
          throw StructureError("S may depend on t only");
    }
    for (const Expr& e : *s.f1)
      if (depends_on(e, VarKind::Control)) throw StructureError("f1 may not depend on the control");
  }
  if (depends_on(s.r, VarKind::State) || depends_on(s.r, VarKind::Control))
    throw StructureError("r may depend on t only");
  if (depends_on(s.g1, VarKind::Control)) throw StructureError("g1 may not depend on the control");

  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const ControlSet& set = p.control_set();
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const double t = unit(rng) * t_max;
    Vec x(d);
    for (int i = 0; i < d; ++i) x[i] = -2.0 + 4.0 * unit(rng);
    Vec u(m);
    if (set.is_box()) {
      for (int k = 0; k < m; ++k) u[k] = set.as_box().lo[k] + unit(rng) * (set.as_box().hi[k] - set.as_box().lo[k]);
    } else {
      const auto& pts = set.as_finite().points;
      u = pts[static_cast<std::size_t>(unit(rng) * static_cast<double>(pts.size())) % pts.size()];
    }
    double g, g1, r;
    try {
      g = p.eval_g(t, x, u);
      g1 = evaluate(s.g1, at(t, x, u));
      r = evaluate(s.r, at(t, x, u));
    } catch (const EvalError&) {
      continue;
    }
    if (!(r > 0.0)) throw StructureError("r must be positive, got " + format_double(r) + " at t=" + format_double(t));
    const double declared = g1 - r * u.squaredNorm();
    if (std::abs(declared - g) > 1e-9 * (1.0 + std::abs(g)))
      throw StructureError("declared g1 - r|u|^2 differs from g at t=" + format_double(t));
    if (s.S) {
      const Vec f = p.eval_f(t, x, u);
      for (int i = 0; i < d; ++i) {
        double fi = evaluate((*s.f1)[static_cast<std::size_t>(i)], at(t, x, u));
        for (int k = 0; k < m; ++k) fi += evaluate((*s.S)[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)], at(t, x, u)) * u[k];
        if (std::abs(fi - f[i]) > 1e-9 * (1.0 + std::abs(f[i])))
          throw StructureError("declared f1 + S u differs from f at t=" + format_double(t));
      }
    }
    ++checked;
  }
  if (checked == 0) throw StructureError("declared structure could not be evaluated at any sample point");
}

}  // namespace

CheckEntry check_quadratic_control_remarks(const ControlProblem& p, const ControlSignal& u,
                                           const VanishingCertificate& cert, const TauSequence& tau,
                                           const QuadStructure& structure, double tol) {
  verify_structure(p, structure, tau.back());

  CheckEntry e;
  e.name = "quadratic_control_remarks";
  e.tolerance = tol;
  for (double t : tau.values()) {
    e.residuals.push_back(u.left_limit(t).norm());
    e.locations.push_back(t);
  }
  const std::size_t prefix = violating_prefix(e.residuals, tol);
  e.extra.push_back({"prefix", static_cast<double>(prefix)});
  e.pass = prefix_acceptable(prefix, e.residuals.size());

  if (structure.S) {
    const int d = p.state_dim();
    const int m = p.control_dim();
    std::vector<double> s_res;
    if (cert.determined()) {
      for (std::size_t n = 0; n < tau.size(); ++n) {
        const Vec zero_x = Vec::Zero(d);
        const Vec& uk = u.left_limit(tau[n]);
        Vec row = Vec::Zero(m);
        for (int i = 0; i < d; ++i)
          for (int k = 0; k < m; ++k)
            row[k] += cert.psi0_at_tau.at(n)[i] *
                      evaluate((*structure.S)[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)],
                               at(tau[n], zero_x, uk));
        s_res.push_back(row.norm());
      }
    }
    const std::size_t s_prefix = violating_prefix(s_res, tol);
    e.extra.push_back({"psi_S_prefix", static_cast<double>(s_prefix)});
    e.extra.push_back({"lambda0", cert.lambda0});
    for (double r : s_res) e.residuals.push_back(r);
    for (double t : tau.values()) e.locations.push_back(t);
    const bool ok = cert.determined() && cert.lambda0 >= 1e-6 && prefix_acceptable(s_prefix, s_res.size());
    if (!ok) e.note = cert.determined() ? "psi0 S does not vanish or lambda0 = 0" : "certificate undetermined";
    e.pass = e.pass && ok;
  }
  return e;
}

}  // namespace tvanish
