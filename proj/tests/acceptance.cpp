// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "tvanish/format.hpp"
#include "tvanish/halkin.hpp"
#include "tvanish/oracle.hpp"
#include "tvanish/pmp.hpp"

using namespace tvanish;
using fixtures::vec;

namespace {

// Pinned tolerances.
constexpr double kPsiInitTol = 1e-6;         // AC1
constexpr double kIStarTol = 1e-9;           // AC2
constexpr double kPsiSupTol = 1e-8;          // AC2
constexpr double kEndpointMaxTol = 1e-8;     // AC2
constexpr double kOracleCapRel = 2e-2;       // AC3
constexpr double kCauchyTol = 1e-6;          // AC4
constexpr double kVariationalRel = 1e-4;     // AC5
constexpr double kFdStep = 1e-6;             // AC5
constexpr double kLimitTol = 1e-6;           // AC6
constexpr double kNormalizationTol = 1e-12;  // AC7
constexpr double kReconstructedTol = 1e-5;   // AC7
constexpr double kDerivativeRel = 1e-6;      // AC8
constexpr double kGainZeroTol = 1e-8;        // AC9
constexpr double kGainRel = 5e-2;            // AC9
constexpr double kRemarkTol = 1e-6;          // AC9
constexpr double kLambdaFloor = 1e-6;        // AC10
constexpr double kTailTol = 1e-4;            // AC10

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(double v) { return format_double(v); }

struct Run {
  ControlProblem p;
  ControlSignal u;
  TauSequence tau;
  Trajectory traj;
  VanishingCertificate cert;
};

Run certify(ControlProblem p, ControlSignal u, TauSequence tau, double step, std::vector<double> extra = {}) {
  std::vector<double> mandatory = tau.values();
  mandatory.insert(mandatory.end(), extra.begin(), extra.end());
  std::sort(mandatory.begin(), mandatory.end());
  const double T = std::max(tau.back(), mandatory.back());
  Trajectory traj = integrate_state(p, u, T, step, mandatory);
  VanishingCertificate cert = extract_certificate(p, traj, u, tau);
  return {std::move(p), std::move(u), std::move(tau), std::move(traj), std::move(cert)};
}

Run halkin_run(double alpha, double beta, double u_value) {
  return certify(make_halkin({alpha, beta, 1.0}), ControlSignal::constant(vec({u_value})),
                 TauSequence::arithmetic(1.0, 1.0, 10), 1e-3);
}

Outcome ac1() {
  const Run r = halkin_run(2.0, 3.0, 2.0);
  const ImproperIntegral ii = adjoint_improper_integral(r.p, r.traj, 0.0, r.tau.back());
  const bool ok = r.cert.kind == CertificateCase::AbnormalDirection && r.cert.lambda0 == 0.0 &&
                  std::abs(r.cert.psi0_init[0] + 1.0) <= kPsiInitTol && ii.divergent;
  return {ok, "case=" + to_string(r.cert.kind) + " lambda0=" + fmt(r.cert.lambda0) +
                  " psi0(0)=" + fmt(r.cert.psi0_init[0]) + " improper_divergent=" + (ii.divergent ? "yes" : "no")};
}

Outcome ac2() {
  const Run r = halkin_run(1.0, 2.0, 1.0);
  if (r.cert.kind != CertificateCase::NormalLimit) return {false, "case=" + to_string(r.cert.kind)};
  double psi_sup = 0.0;
  for (const Vec& psi : r.cert.limit_arc->psi) psi_sup = std::max(psi_sup, psi.norm());
  double endpoint = 0.0;
  for (const PerTau& pn : r.cert.per_n) {
    MultiplierArc arc = adjoint_via_cauchy(r.traj, pn.lambda_n, pn.psi_n_init);
    const std::size_t end = r.traj.index_of(pn.tau) + 1;
    arc.grid.resize(end);
    arc.psi.resize(end);
    const MaxResidual mr = maximum_residual(r.p, r.traj, r.u, arc, 11, 50);
    endpoint = std::max(endpoint, mr.profile.back());
  }
  const double I_star = (*r.cert.I_star)[0];
  const bool ok = std::abs(I_star) <= kIStarTol && r.cert.lambda0 == 1.0 && psi_sup <= kPsiSupTol &&
                  endpoint <= kEndpointMaxTol;
  return {ok, "case=NORMAL_LIMIT I_star=" + fmt(I_star) + " lambda0=" + fmt(r.cert.lambda0) +
                  " sup|psi0|=" + fmt(psi_sup) + " max endpoint maxH_k=" + fmt(endpoint)};
}

Outcome ac3() {
  const TauSequence tau = TauSequence::from_values({1.0, 2.0, 3.0});
  auto opts = [](double hi, int nodes) {
    OracleOptions o;
    o.box = {vec({0.5}), vec({hi})};
    o.nodes_per_axis = nodes;
    o.dt = 1e-3;
    o.control_grid_n = 3;
    return o;
  };
  std::ostringstream detail;
  bool ok = true;
  for (const double alpha : {1.0, 2.0}) {
    const OracleOptions o = alpha == 1.0 ? opts(1005.0, 203) : opts(20172.0, 4001);
    const OracleReport rep =
        strong_optimality_test(make_halkin({alpha, alpha + 1, 1.0}), ControlSignal::constant(vec({alpha})), tau, o);
    double worst = INFINITY;
    for (const MarginRow& row : rep.rows) {
      ok = ok && row.margin >= -row.tolerance && row.tolerance <= kOracleCapRel * (1 + std::abs(row.V_oracle));
      worst = std::min(worst, row.margin + row.tolerance);
    }
    ok = ok && rep.pass;
    detail << "alpha=" << fmt(alpha) << " min(margin+tol)=" << fmt(worst) << " tol(tau=3)=" << fmt(rep.rows.back().tolerance)
           << "; ";
  }
  const OracleReport bad = strong_optimality_test(make_halkin({1.0, 2.0, 1.0}), ControlSignal::constant(vec({2.0})),
                                                  tau, opts(1005.0, 203));
  double best = -INFINITY;
  for (const MarginRow& row : bad.rows) {
    ok = ok && row.margin < -row.tolerance;
    best = std::max(best, row.margin + row.tolerance);
  }
  ok = ok && !bad.pass;
  detail << "u=beta max(margin+tol)=" << fmt(best);
  return {ok, detail.str()};
}

Outcome ac4() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst = 0.0;
  bool ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = fixtures::random_linear_case(rng);
    const Trajectory tr = integrate_state(c.problem, c.control, c.horizon, 1e-3);
    Vec psi0(c.problem.state_dim());
    for (Eigen::Index i = 0; i < psi0.size(); ++i) psi0[i] = unit(rng);
    const double lambda = std::abs(unit(rng));
    const MultiplierArc cauchy = adjoint_via_cauchy(tr, lambda, psi0);
    const MultiplierArc back =
        integrate_adjoint_backward(c.problem, tr, c.control, lambda, cauchy.psi.back(), 0.0, c.horizon);
    double scale = 0.0, err = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      scale = std::max(scale, cauchy.psi[k].norm());
      err = std::max(err, (cauchy.psi[k] - back.psi[k]).norm());
    }
    worst = std::max(worst, err / (1 + scale));
    ok = ok && err <= kCauchyTol * (1 + scale);
  }
  return {ok, "20 problems, max sup|diff|/(1+max|psi|)=" + fmt(worst)};
}

Mat fd_jacobian(const ControlProblem& p, const ControlSignal& u, double T) {
  const int d = p.state_dim();
  Mat J(d, d);
  for (int j = 0; j < d; ++j) {
    const double h = kFdStep * (1 + std::abs(p.x_init()[j]));
    Vec xp = p.x_init(), xm = p.x_init();
    xp[j] += h;
    xm[j] -= h;
    const auto pp = ControlProblem::from_exprs(p.f(), p.g(), p.control_set(), xp);
    const auto pm = ControlProblem::from_exprs(p.f(), p.g(), p.control_set(), xm);
    J.col(j) = (integrate_state(pp, u, T, 1e-3).x.back() - integrate_state(pm, u, T, 1e-3).x.back()) / (2 * h);
  }
  return J;
}

Outcome ac5() {
  std::mt19937_64 rng(505);
  double worst = 0.0;
  bool ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = fixtures::random_linear_case(rng);
    const Mat A = integrate_state(c.problem, c.control, c.horizon, 1e-3).A.back();
    const double rel = (A - fd_jacobian(c.problem, c.control, c.horizon)).norm() / A.norm();
    worst = std::max(worst, rel);
    ok = ok && rel <= kVariationalRel;
  }
  const ControlProblem h = make_halkin({2.0, 3.0, 1.0});
  const ControlSignal u = ControlSignal::constant(vec({2.0}));
  const double A = integrate_state(h, u, 3.0, 1e-3).A.back()(0, 0);
  const double closed = halkin_closed_form({2.0, 3.0, 1.0}, 3.0).A;
  const double fd = fd_jacobian(h, u, 3.0)(0, 0);
  const double rel_h = std::max(std::abs(A - closed), std::abs(A - fd)) / std::abs(closed);
  ok = ok && rel_h <= kVariationalRel;
  return {ok, "random suite max rel=" + fmt(worst) + "; Halkin T=3 rel=" + fmt(rel_h)};
}

Outcome ac6() {
  const ControlProblem p = fixtures::scalar("0", "exp(-t)*x1", 1.0);
  const std::vector<double> Ts{0.0, 0.5, 1.0, 2.0};
  const Run r = certify(p, ControlSignal::constant(vec({0.0})), TauSequence::arithmetic(5.0, 5.0, 10), 1e-3,
                        {0.5, 1.0, 2.0, 40.0});
  const MultiplierArc limit = adjoint_from_limit(r.traj, vec({1.0}));
  double worst = 0.0;
  for (double T : Ts) {
    const double exact = std::exp(-T);
    const double e1 = std::abs(limit.psi[r.traj.index_of(T)][0] - exact);
    const double e2 = std::abs(adjoint_improper_integral(p, r.traj, T, 40.0).psi_T[0] - exact);
    worst = std::max({worst, e1, e2});
  }
  return {worst <= kLimitTol, "max |psi0(T) - e^-T| over both formulas=" + fmt(worst)};
}

Outcome ac7(const std::vector<const Run*>& runs) {
  double norm_err = 0.0, endpoint = 0.0;
  std::size_t count = 0;
  for (const Run* r : runs)
    for (const PerTau& pn : r->cert.per_n) {
      norm_err = std::max(norm_err, std::abs(pn.psi_n_init.norm() + pn.lambda_n - 1.0));
      endpoint = std::max(endpoint, pn.endpoint_residual);
      ++count;
    }
  return {norm_err <= kNormalizationTol && endpoint <= kReconstructedTol,
          std::to_string(count) + " truncated pairs, max normalization error=" + fmt(norm_err) +
              " max |psi_n(tau_n)|=" + fmt(endpoint)};
}

Outcome ac8() {
  const std::vector<std::string> corpus{
      "u1*x1",          "(1-u1)*x1",        "exp(-t)*x1^2",          "sin(x1)*cos(x2)",
      "log(1+x1^2)",    "sqrt(2+cos(x1*x2))", "x1/(1+x2^2)",         "x1^x2",
      "x1+u1",          "x1-u1^2",          "u2-x1^2",               "(x1+x2)^3*exp(-x1)",
      "cos(t)*x1",      "exp(sin(x1*x2))-x1^3/3", "-x1^-2",          "2^x1"};
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> xs(0.5, 2.0), ts(0.0, 3.0), us(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, corpus.size() - 1);
  const double h = 1e-5;
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Expr e = parse(corpus[pick(rng)]);
    std::vector<double> x{xs(rng), xs(rng)};
    const std::vector<double> u{us(rng), us(rng)};
    const double t = ts(rng);
    for (int j = 0; j < 2; ++j) {
      const double analytic = evaluate(differentiate(e, Variable{VarKind::State, j}), Point{t, x, u});
      const double saved = x[j];
      x[j] = saved + h;
      const double fp = evaluate(e, Point{t, x, u});
      x[j] = saved - h;
      const double fm = evaluate(e, Point{t, x, u});
      x[j] = saved;
      worst = std::max(worst, std::abs(analytic - (fp - fm) / (2 * h)) / (1 + std::abs(analytic)));
    }
  }
  return {worst <= kDerivativeRel, "100 points x 2 partials, max |d - fd|/(1+|d|)=" + fmt(worst)};
}

Outcome ac9() {
  const double alpha = 1.0, beta = 2.0;
  const ControlProblem h = make_halkin({alpha, beta, 1.0});
  const TauSequence tau = TauSequence::arithmetic(1.0, 1.0, 5);
  const ControlSignal ua = ControlSignal::constant(vec({alpha}));
  const ControlSignal ub = ControlSignal::constant(vec({beta}));
  const Trajectory ta = integrate_state(h, ua, tau.back(), 1e-3, tau.values());
  const Trajectory tb = integrate_state(h, ub, tau.back(), 1e-3, tau.values());
  double zero = 0.0, rel = 0.0;
  for (double t : tau.values()) {
    zero = std::max(zero, endpoint_gain_residual(h, ta, ua, t, 1e-2, 11).residual);
    const double expect = (beta - alpha) * tb.x[tb.index_of(t)][0];
    rel = std::max(rel, std::abs(endpoint_gain_residual(h, tb, ub, t, 1e-2, 11).residual - expect) / expect);
  }
  bool ok = zero <= kGainZeroTol && rel <= kGainRel;

  const ControlProblem q = ControlProblem::from_exprs({parse("x1+u1")}, parse("x1-u1^2"),
                                                      ControlSet::box(vec({-1.0}), vec({1.0})), vec({1.0}));
  const QuadStructure structure{parse("x1"), parse("1"), std::nullopt, std::nullopt};
  const TauSequence qt = TauSequence::arithmetic(1.0, 1.0, 8);
  bool remarks = true;
  for (const double uv : {0.0, 0.5}) {
    const Run r = certify(q, ControlSignal::constant(vec({uv})), qt, 1e-3);
    const CheckEntry e = check_quadratic_control_remarks(q, r.u, r.cert, qt, structure, kRemarkTol);
    remarks = remarks && e.pass == (uv == 0.0);
  }
  ok = ok && remarks;
  return {ok, "gain(u=alpha) max=" + fmt(zero) + " gain(u=beta) rel err=" + fmt(rel) +
                  " quadratic remarks pass(0)/fail(0.5)=" + (remarks ? "yes" : "no")};
}

Outcome ac10() {
  const fixtures::DiskCase disk = fixtures::disk_vectogram();
  const Run d = certify(disk.problem, disk.control, TauSequence::arithmetic(1.0, 1.0, 10), 1e-3);
  const CheckEntry ed = check_strict_convexity_consequence(d.cert, kTailTol);
  double tail = 0.0;
  for (std::size_t k = ed.residuals.size() / 2; k < ed.residuals.size(); ++k) tail = std::max(tail, ed.residuals[k]);
  const Run h = halkin_run(2.0, 3.0, 2.0);
  const CheckEntry eh = check_strict_convexity_consequence(h.cert, kTailTol);
  const bool ok = ed.pass && d.cert.lambda0 >= kLambdaFloor && tail < kTailTol && !eh.pass;
  return {ok, "disk lambda0=" + fmt(d.cert.lambda0) + " tail max |psi0|=" + fmt(tail) +
                  " check=" + (ed.pass ? "pass" : "fail") + "; Halkin alpha=2 check=" + (eh.pass ? "pass" : "fail")};
}

}  // namespace

int main() {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  int failures = 0;
  auto report = [&](int id, const std::function<Outcome()>& fn) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    std::printf("AC%-2d %s  %s  [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };

  report(1, ac1);
  report(2, ac2);
  report(3, ac3);
  report(4, ac4);
  report(5, ac5);
  report(6, ac6);
  report(7, [] {
    const Run a2 = halkin_run(2.0, 3.0, 2.0);
    const Run a1 = halkin_run(1.0, 2.0, 1.0);
    const Run ab = halkin_run(1.0, 2.0, 2.0);
    const Run disc = certify(fixtures::scalar("0", "exp(-t)*x1", 1.0), ControlSignal::constant(vec({0.0})),
                             TauSequence::arithmetic(5.0, 5.0, 10), 1e-3);
    const fixtures::DiskCase dc = fixtures::disk_vectogram();
    const Run disk = certify(dc.problem, dc.control, TauSequence::arithmetic(1.0, 1.0, 10), 1e-3);
    std::vector<double> osc_tau;
    for (int n = 0; n < 10; ++n) osc_tau.push_back(M_PI / 2 + n * M_PI);
    const Run osc = certify(fixtures::scalar("0", "cos(t)*x1", 1.0), ControlSignal::constant(vec({0.0})),
                            TauSequence::from_values(osc_tau), 1e-3);
    return ac7({&a2, &a1, &ab, &disc, &disk, &osc});
  });
  report(8, ac8);
  report(9, ac9);
  report(10, ac10);

  const double total = std::chrono::duration<double>(Clock::now() - start).count();
  std::printf("%d of 10 criteria passed in %.1fs\n", 10 - failures, total);
  return failures == 0 ? 0 : 1;
}
