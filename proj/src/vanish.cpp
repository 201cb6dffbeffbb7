#include "tvanish/vanish.hpp"

#include <algorithm>
#include <cmath>

#include "tvanish/format.hpp"

namespace tvanish {

TauSequence::TauSequence(std::vector<double> values, Generator g) : values_(std::move(values)), generator_(g) {
  if (values_.empty()) throw DimensionError("tau sequence is empty");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]) || !(values_[i] > 0.0))
      throw DimensionError("tau values must be positive and finite, got " + format_double(values_[i]));
    if (i > 0 && !(values_[i] > values_[i - 1])) throw DimensionError("tau values must be strictly increasing");
  }
}

TauSequence TauSequence::arithmetic(double t0, double d, int count) {
  if (count < 1) throw DimensionError("tau count must be positive");
  std::vector<double> v;
  for (int i = 0; i < count; ++i) v.push_back(t0 + d * i);
  return TauSequence(std::move(v), Generator::Arithmetic);
}

TauSequence TauSequence::geometric(double t0, double r, int count) {
  if (count < 1) throw DimensionError("tau count must be positive");
  std::vector<double> v;
  double t = t0;
  for (int i = 0; i < count; ++i, t *= r) v.push_back(t);
  return TauSequence(std::move(v), Generator::Geometric);
}

TauSequence TauSequence::from_values(std::vector<double> values) {
  return TauSequence(std::move(values), Generator::Explicit);
}

std::string to_string(CertificateCase c) {
  switch (c) {
    case CertificateCase::NormalLimit:
      return "NORMAL_LIMIT";
    case CertificateCase::AbnormalDirection:
      return "ABNORMAL_DIRECTION";
    case CertificateCase::Undetermined:
      break;
  }
  return "UNDETERMINED";
}

TruncatedMultiplier truncated_multiplier(const Trajectory& traj, double tau_n) {
  const std::size_t k = traj.index_of(tau_n);
  const Vec& I = traj.I[k];
  if (!I.allFinite()) throw NumericalError("non-finite gradient integral", tau_n);
  const double lambda = 1.0 / (1.0 + I.norm());
  return {lambda, lambda * I};
}

namespace {

double max_pairwise(const std::vector<Vec>& v) {
  double out = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) out = std::max(out, (v[i] - v[j]).norm());
  return out;
}

Vec compactified(const Vec& I) {
  const double lambda = 1.0 / (1.0 + I.norm());
  Vec z(I.size() + 1);
  z[0] = lambda;
  z.tail(I.size()) = lambda * I;
  return z;
}

Vec mean_of(const std::vector<Vec>& v) {
  Vec m = Vec::Zero(v.front().size());
  for (const Vec& x : v) m += x;
  return m / static_cast<double>(v.size());
}

}  // namespace

Classification classify_I_sequence(const std::vector<Vec>& I_values, const ClassifyOptions& opts) {
  if (opts.tail_k < 2) throw DimensionError("tail_k must be at least 2");
  const std::size_t k = static_cast<std::size_t>(opts.tail_k);
  if (I_values.size() < k + 2)
    throw DimensionError("classification needs at least tail_k + 2 = " + std::to_string(k + 2) + " values");
  for (const Vec& I : I_values)
    if (!I.allFinite()) throw NumericalError("non-finite gradient integral in the sequence", NAN);

  const std::size_t n = I_values.size();
  const std::vector<Vec> tail(I_values.end() - static_cast<long>(k), I_values.end());
  double tail_max = 0.0;
  for (const Vec& I : tail) tail_max = std::max(tail_max, I.norm());

  Classification out;
  out.eps_conv = opts.eps_conv.value_or(1e-5 * (1.0 + tail_max));
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;

  if (max_pairwise(tail) <= out.eps_conv) {
    out.kind = CertificateCase::NormalLimit;
    out.I_star = mean_of(tail);
    out.subsequence = all;
    return out;
  }

  bool growing = true;
  for (std::size_t i = 1; i < k; ++i) growing = growing && tail[i].norm() > tail[i - 1].norm();
  growing = growing && tail.back().norm() > opts.growth_ratio * tail.front().norm();
  if (growing) {
    std::vector<Vec> dirs;
    for (const Vec& I : tail) {
      if (I.norm() == 0.0) throw NumericalError("zero gradient integral in a growing tail", NAN);
      dirs.push_back(I / I.norm());
    }
    if (max_pairwise(dirs) <= opts.eps_conv.value_or(opts.cluster_radius)) {
      out.kind = CertificateCase::AbnormalDirection;
      const Vec m = mean_of(dirs);
      out.direction = m / m.norm();
      out.subsequence = all;
      return out;
    }
  }

  out.kind = CertificateCase::Undetermined;
  std::vector<Vec> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = compactified(I_values[i]);
  std::vector<std::size_t> tail_count;
  for (std::size_t i = n - k; i < n; ++i) {
    bool placed = false;
    for (std::size_t c = 0; c < out.clusters.size() && !placed; ++c) {
      if ((z[i] - out.clusters[c].center).norm() <= opts.cluster_radius) {
        ++tail_count[c];
        placed = true;
      }
    }
    if (!placed) {
      out.clusters.push_back({z[i], {}});
      tail_count.push_back(1);
    }
  }
  for (auto& c : out.clusters)
    for (std::size_t i = 0; i < n; ++i)
      if ((z[i] - c.center).norm() <= opts.cluster_radius) c.members.push_back(i);

  std::size_t best = 0;
  for (std::size_t c = 1; c < out.clusters.size(); ++c) {
    if (tail_count[c] > tail_count[best] ||
        (tail_count[c] == tail_count[best] && out.clusters[c].members.back() > out.clusters[best].members.back()))
      best = c;
  }
  out.subsequence = out.clusters[best].members;
  return out;
}

namespace {

// psi(t_k) = A^{-T}(t_k) (psi0 - lambda I(t_k))
Vec cauchy_at(const Trajectory& traj, std::size_t k, double lambda, const Vec& psi0) {
  return row_times_inverse(traj.A[k], psi0 - lambda * traj.I[k], traj.grid[k]);
}

}  // namespace

VanishingCertificate extract_certificate(const ControlProblem& p, const Trajectory& traj, const ControlSignal& u,
                                         const TauSequence& tau, const VanishOptions& opts) {
  if (p.state_dim() != traj.state_dim()) throw DimensionError("trajectory does not belong to the problem");
  if (u.dim() != p.control_dim()) throw DimensionError("control signal dimension differs from the problem");

  VanishingCertificate cert;
  cert.tail_k = opts.classify.tail_k;
  cert.growth_ratio = opts.classify.growth_ratio;

  std::vector<std::size_t> idx;
  std::vector<Vec> I_values;
  for (double t : tau.values()) {
    const std::size_t k = traj.index_of(t);
    const TruncatedMultiplier m = truncated_multiplier(traj, t);
    PerTau row{t, m.lambda, m.psi_init, traj.I[k].norm(), std::nullopt, 0.0};
    row.endpoint_residual = cauchy_at(traj, k, m.lambda, m.psi_init).norm();
    cert.per_n.push_back(std::move(row));
    idx.push_back(k);
    I_values.push_back(traj.I[k]);
  }

  const Classification cls = classify_I_sequence(I_values, opts.classify);
  cert.kind = cls.kind;
  cert.eps_conv = cls.eps_conv;
  cert.subsequence = cls.subsequence;
  cert.clusters = cls.clusters;
  if (cls.kind == CertificateCase::Undetermined) return cert;

  if (cls.kind == CertificateCase::NormalLimit) {
    cert.lambda0 = 1.0;
    cert.psi0_init = *cls.I_star;
    cert.I_star = cls.I_star;
    for (auto& row : cert.per_n) row.psi_hat_init = row.psi_n_init / row.lambda_n;
  } else {
    cert.lambda0 = 0.0;
    cert.psi0_init = *cls.direction;
    cert.direction = cls.direction;
    for (auto& row : cert.per_n)
      if (row.psi_n_init.norm() > 0.0) row.psi_hat_init = row.psi_n_init / row.psi_n_init.norm();
  }

  cert.limit_arc = adjoint_via_cauchy(traj, cert.lambda0, cert.psi0_init);
  for (std::size_t n = 0; n < idx.size(); ++n) {
    const Vec& psi = cert.limit_arc->psi[idx[n]];
    cert.psi0_at_tau.push_back(psi);
    cert.psi0_A_at_tau.push_back(traj.A[idx[n]].transpose() * psi);
  }

  std::vector<double> Ks = opts.compacts;
  if (Ks.empty())
    for (std::size_t i = 0; i < std::min<std::size_t>(3, tau.size()); ++i) Ks.push_back(tau[i]);
  for (double K : Ks) {
    if (!(K > 0.0) || K > traj.horizon() * (1 + 1e-12))
      throw DimensionError("compact [0, " + format_double(K) + "] is not covered by the trajectory");
    CompactConvergence cc{K, {}, {}};
    for (std::size_t n = 0; n < cert.per_n.size(); ++n) {
      const PerTau& row = cert.per_n[n];
      if (row.tau < K * (1 - 1e-12) || !row.psi_hat_init) continue;
      const double lambda_hat =
          cert.kind == CertificateCase::NormalLimit ? 1.0 : row.lambda_n / row.psi_n_init.norm();
      double sup = 0.0;
      for (std::size_t k = 0; k < traj.size() && traj.grid[k] <= K * (1 + 1e-12); ++k) {
        const Vec diff = (*row.psi_hat_init - cert.psi0_init) - (lambda_hat - cert.lambda0) * traj.I[k];
        sup = std::max(sup, row_times_inverse(traj.A[k], diff, traj.grid[k]).norm());
      }
      cc.n.push_back(n);
      cc.distance.push_back(sup);
    }
    cert.convergence.push_back(std::move(cc));
  }
  return cert;
}

MultiplierArc adjoint_from_limit(const Trajectory& traj, const Vec& I_star) {
  if (I_star.size() != traj.state_dim()) throw DimensionError("I_star has wrong dimension");
  MultiplierArc arc;
  arc.lambda = 1.0;
  arc.grid = traj.grid;
  for (std::size_t k = 0; k < traj.size(); ++k)
    arc.psi.push_back(row_times_inverse(traj.A[k], I_star - traj.I[k], traj.grid[k]));
  return arc;
}

ImproperIntegral adjoint_improper_integral(const ControlProblem& p, const Trajectory& traj, double T, double tail_T,
                                          double tol) {
  if (p.state_dim() != traj.state_dim()) throw DimensionError("trajectory does not belong to the problem");
  if (!(tail_T > T)) throw DimensionError("tail horizon must exceed T");
  if (tail_T > traj.horizon() * (1 + 1e-12))
    throw DimensionError("tail horizon " + format_double(tail_T) + " beyond the trajectory");
  const std::size_t k = traj.index_of(T);
  const Mat& A = traj.A[k];
  auto I = [&](double t) { return traj.gradient_integral_at(t); };

  const double mid = 0.5 * (tail_T + T);
  const double mid2 = 0.5 * (mid + T);
  ImproperIntegral out;
  out.psi_T = row_times_inverse(A, I(tail_T) - traj.I[k], T);
  out.tail_estimate = row_times_inverse(A, I(tail_T) - I(mid), T).norm();
  out.half_tail_estimate = row_times_inverse(A, I(mid) - I(mid2), T).norm();
  out.divergent = !(out.tail_estimate <= tol) || out.tail_estimate > out.half_tail_estimate;
  return out;
}

}  // namespace tvanish
