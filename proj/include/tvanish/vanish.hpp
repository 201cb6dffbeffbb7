#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tvanish/integrate.hpp"

namespace tvanish {

/// Finite, strictly increasing list of positive times tau_1 < tau_2 < ...
class TauSequence {
 public:
  enum class Generator { Arithmetic, Geometric, Explicit };

  static TauSequence arithmetic(double t0, double d, int count);
  static TauSequence geometric(double t0, double r, int count);
  static TauSequence from_values(std::vector<double> values);

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double back() const { return values_.back(); }
  Generator generator() const { return generator_; }

 private:
  TauSequence(std::vector<double> values, Generator g);
  std::vector<double> values_;
  Generator generator_;
};

enum class CertificateCase { NormalLimit, AbnormalDirection, Undetermined };

std::string to_string(CertificateCase c);

/// Truncated multiplier pair with psi(tau_n) = 0 and |psi(0)| + lambda = 1.
struct TruncatedMultiplier {
  double lambda;
  Vec psi_init;
};

TruncatedMultiplier truncated_multiplier(const Trajectory& traj, double tau_n);

struct Cluster {
  Vec center;                        // in (lambda_n, psi_n(0)) coordinates
  std::vector<std::size_t> members;  // indices into the full sequence
};

struct Classification {
  CertificateCase kind = CertificateCase::Undetermined;
  std::optional<Vec> I_star;
  std::optional<Vec> direction;
  std::vector<std::size_t> subsequence;
  std::vector<Cluster> clusters;
  double eps_conv = 0.0;
};

struct ClassifyOptions {
  std::optional<double> eps_conv;  // default 1e-5 (1 + max tail |I|)
  int tail_k = 5;
  double growth_ratio = 10.0;
  double cluster_radius = 1e-3;
};

/// Decides between a convergent tail (NORMAL_LIMIT), a tail that grows with
/// a settled direction (ABNORMAL_DIRECTION) and neither (UNDETERMINED).
/// Directions are compared with eps_conv when given, else cluster_radius. In
/// the last case the tail points (lambda_n, psi_n(0)) are grouped by
/// greedy ball clustering and the most populated cluster (ties: the one
/// holding the latest index) supplies the candidate subsequence.
Classification classify_I_sequence(const std::vector<Vec>& I_values, const ClassifyOptions& opts = {});

struct PerTau {
  double tau;
  double lambda_n;
  Vec psi_n_init;
  double I_norm;
  /// psi_n(0) after dividing by lambda_n (normal) or |psi_n(0)| (abnormal).
  std::optional<Vec> psi_hat_init;
  /// |psi_n(tau_n)| reconstructed through the Cauchy formula.
  double endpoint_residual;
};

/// sup over [0, K] of |psi_hat_n - psi_0| for every n with tau_n >= K.
struct CompactConvergence {
  double K;
  std::vector<std::size_t> n;
  std::vector<double> distance;
};

struct VanishingCertificate {
  CertificateCase kind = CertificateCase::Undetermined;
  double lambda0 = 0.0;
  Vec psi0_init;
  std::optional<Vec> I_star;
  std::optional<Vec> direction;
  std::vector<std::size_t> subsequence;
  std::vector<Cluster> clusters;
  std::vector<PerTau> per_n;
  std::vector<CompactConvergence> convergence;
  /// psi_0 and psi_0 A at every tau_n (empty when undetermined).
  std::vector<Vec> psi0_at_tau;
  std::vector<Vec> psi0_A_at_tau;
  /// The limit pair on the whole trajectory grid.
  std::optional<MultiplierArc> limit_arc;
  double eps_conv = 0.0;
  int tail_k = 0;
  double growth_ratio = 0.0;

  bool determined() const { return kind != CertificateCase::Undetermined; }
};

struct VanishOptions {
  ClassifyOptions classify;
  /// Right ends of the nested compacts [0, K]; empty picks the first three tau values.
  std::vector<double> compacts;
};

VanishingCertificate extract_certificate(const ControlProblem& p, const Trajectory& traj, const ControlSignal& u,
                                         const TauSequence& tau, const VanishOptions& opts = {});

/// lambda = 1 arc with psi(T) = (I_* - I(T)) A^{-1}(T).
MultiplierArc adjoint_from_limit(const Trajectory& traj, const Vec& I_star);

struct ImproperIntegral {
  Vec psi_T;
  double tail_estimate;
  /// Same indicator for the tail ending halfway between T and tail_T.
  double half_tail_estimate;
  bool divergent;
};

/// psi(T) = (I(tail_T) - I(T)) A^{-1}(T). `T` must be a grid point.
/// Divergent when the tail estimate exceeds `tol` or grows with the horizon.
ImproperIntegral adjoint_improper_integral(const ControlProblem& p, const Trajectory& traj, double T, double tail_T,
                                          double tol = 1e-6);

}  // namespace tvanish
