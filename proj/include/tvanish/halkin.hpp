#pragma once

#include <string>
#include <vector>

#include "tvanish/integrate.hpp"
#include "tvanish/vanish.hpp"

namespace tvanish {

/// x' = u x, g = (1 - u) x, u in [alpha, beta], x(0) = x_init > 0.
struct HalkinParams {
  double alpha = 1.0;
  double beta = 2.0;
  double x_init = 1.0;

  /// Throws DimensionError unless alpha <= beta, x_init > 0, all finite.
  void validate() const;
};

ControlProblem make_halkin(const HalkinParams& params);

/// Largest horizon accepted by the closed forms: 25 / max(|alpha|, 1).
double halkin_horizon_cap(double alpha);

/// Values at T under u = alpha. The alpha = 0 branch uses expm1(aT)/a -> T.
struct HalkinClosedForm {
  double x;
  double J;
  double I;
  double A;
};

HalkinClosedForm halkin_closed_form(const HalkinParams& params, double T);

enum class HalkinCase { Case1JToMinusInf, Case2JToPlusInfExcluded, Case3FiniteLimit };

std::string to_string(HalkinCase c);

struct HalkinAnalysis {
  HalkinCase kind = HalkinCase::Case3FiniteLimit;
  std::vector<double> tau;
  std::vector<HalkinClosedForm> closed_form;
  /// R(t) = I_* - J(t) - x(t) on the trajectory grid, finite-limit case only.
  std::vector<double> R_times;
  std::vector<double> R;
  bool R_strictly_decreasing = false;
  bool strongly_optimal = false;
  std::string note;
};

/// Maps a certificate for u = alpha to the three cases. Throws
/// StructureError if the certificate's |I(tau_n)| disagree with the closed
/// form (relative 1e-4), Error if the certificate is undetermined.
HalkinAnalysis analyze_case(const HalkinParams& params, const TauSequence& tau, const VanishingCertificate& cert,
                            const Trajectory& traj);

}  // namespace tvanish
