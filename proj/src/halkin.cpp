#include "tvanish/halkin.hpp"

#include <algorithm>
#include <cmath>

#include "tvanish/format.hpp"

namespace tvanish {

void HalkinParams::validate() const {
  if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(x_init))
    throw DimensionError("Halkin parameters must be finite");
  if (alpha > beta) throw DimensionError("Halkin parameters need alpha <= beta");
  if (!(x_init > 0.0)) throw DimensionError("Halkin parameters need x_init > 0");
}

ControlProblem make_halkin(const HalkinParams& params) {
  params.validate();
  Vec lo(1), hi(1), x0(1);
  lo << params.alpha;
  hi << params.beta;
  x0 << params.x_init;
  return ControlProblem::from_exprs({parse("u1*x1")}, parse("(1-u1)*x1"), ControlSet::box(lo, hi), x0);
}

double halkin_horizon_cap(double alpha) { return 25.0 / std::max(std::abs(alpha), 1.0); }

HalkinClosedForm halkin_closed_form(const HalkinParams& params, double T) {
  params.validate();
  if (!(T >= 0.0)) throw DimensionError("horizon must be nonnegative");
  if (T > halkin_horizon_cap(params.alpha))
    throw DimensionError("horizon " + format_double(T) + " exceeds the cap " +
                         format_double(halkin_horizon_cap(params.alpha)));
  const double a = params.alpha;
  const double growth = std::exp(a * T);
  const double integral = a == 0.0 ? T : std::expm1(a * T) / a;  // int_0^T e^{at} dt
  const double I = (1.0 - a) * integral;
  return {params.x_init * growth, params.x_init * I, I, growth};
}

std::string to_string(HalkinCase c) {
  switch (c) {
    case HalkinCase::Case1JToMinusInf:
      return "CASE1_J_TO_MINUS_INF";
    case HalkinCase::Case2JToPlusInfExcluded:
      return "CASE2_J_TO_PLUS_INF_EXCLUDED";
    case HalkinCase::Case3FiniteLimit:
      break;
  }
  return "CASE3_FINITE_LIMIT";
}

HalkinAnalysis analyze_case(const HalkinParams& params, const TauSequence& tau, const VanishingCertificate& cert,
                            const Trajectory& traj) {
  params.validate();
  if (cert.per_n.size() != tau.size()) throw StructureError("certificate and tau sequence differ in length");
  if (traj.state_dim() != 1) throw StructureError("trajectory is not from a scalar Halkin problem");

  HalkinAnalysis out;
  out.tau = tau.values();
  for (std::size_t n = 0; n < tau.size(); ++n) {
    const HalkinClosedForm cf = halkin_closed_form(params, tau[n]);
    const double I_cert = cert.per_n[n].I_norm;
    if (std::abs(I_cert - std::abs(cf.I)) > 1e-4 * std::abs(cf.I) + 1e-9)
      throw StructureError("certificate |I(" + format_double(tau[n]) + ")| = " + format_double(I_cert) +
                           " does not match the closed form " + format_double(std::abs(cf.I)));
    out.closed_form.push_back(cf);
  }
  if (!cert.determined()) throw Error("certificate is undetermined; no case can be assigned");

  out.strongly_optimal = params.alpha >= 1.0;
  if (cert.kind == CertificateCase::AbnormalDirection) {
    if ((*cert.direction)[0] < 0.0) {
      out.kind = HalkinCase::Case1JToMinusInf;
      out.note = "J(tau_n) -> -inf; abnormal limit lambda0 = 0, psi0(0) = -1; requires alpha > 1";
    } else {
      out.kind = HalkinCase::Case2JToPlusInfExcluded;
      out.note = "J(tau_n) -> +inf contradicts the endpoint gain condition";
    }
  } else {
    out.kind = HalkinCase::Case3FiniteLimit;
    const double I_star = (*cert.I_star)[0];
    out.R_strictly_decreasing = true;
    for (std::size_t k = 0; k < traj.size(); ++k) {
      out.R_times.push_back(traj.grid[k]);
      out.R.push_back(I_star - traj.J[k] - traj.x[k][0]);
      if (k > 0 && !(out.R[k] < out.R[k - 1])) out.R_strictly_decreasing = false;
    }
    out.note = params.alpha == 1.0 ? "J(tau_n) converges; the finite-limit chain gives u0 = alpha = 1"
                                   : "J(tau_n) converges; the finite-limit chain forces alpha = 1, contradiction";
  }
  if (!out.strongly_optimal) out.note += "; no strongly optimal control found for alpha < 1";
  return out;
}

}  // namespace tvanish
