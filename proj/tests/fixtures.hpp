#pragma once

// Shared problem fixtures for the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "tvanish/format.hpp"
#include "tvanish/problem.hpp"

namespace fixtures {

using tvanish::ControlProblem;
using tvanish::ControlSet;
using tvanish::ControlSignal;
using tvanish::Vec;

inline Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline ControlProblem halkin(double alpha, double beta, double x0 = 1.0) {
  return ControlProblem::from_exprs({tvanish::parse("u1*x1")}, tvanish::parse("(1-u1)*x1"),
                                    ControlSet::box(vec({alpha}), vec({beta})), vec({x0}));
}

inline ControlProblem scalar(const std::string& f, const std::string& g, double x0, double lo = 0.0,
                             double hi = 1.0) {
  return ControlProblem::from_exprs({tvanish::parse(f)}, tvanish::parse(g), ControlSet::box(vec({lo}), vec({hi})),
                                    vec({x0}));
}

/// f = u1, g = u2 - x1^2 with U a 32-point polygon inscribed in the unit
/// circle. The candidate drives x from 1/2 to 0 with u = (-1, 0) and then
/// holds u = (0, 1), so I(t) = t^2 - t up to t = 1/2 and -1/4 afterwards.
struct DiskCase {
  ControlProblem problem;
  ControlSignal control;
};

inline DiskCase disk_vectogram() {
  std::vector<Vec> points;
  for (int k = 0; k < 32; ++k) {
    const double a = 2 * M_PI * k / 32;
    double c = std::cos(a), s = std::sin(a);
    if (std::abs(c) < 1e-15) c = 0.0;
    if (std::abs(s) < 1e-15) s = 0.0;
    points.push_back(vec({c, s}));
  }
  return {ControlProblem::from_exprs({tvanish::parse("u1")}, tvanish::parse("u2-x1^2"), ControlSet::finite(points),
                                     vec({0.5})),
          ControlSignal({0.0, 0.5}, {vec({-1.0, 0.0}), vec({0.0, 1.0})})};
}

inline std::string num(double v) { return "(" + tvanish::format_double(v) + ")"; }

struct RandomCase {
  ControlProblem problem;
  ControlSignal control;
  double horizon;
};

/// f = M(t) x + C(t) u with smooth time-varying coefficients, g linear in x
/// with a quadratic control cost; dimensions up to 3, horizon up to 5.
inline RandomCase random_linear_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim_d(1, 3);
  std::uniform_int_distribution<int> dim_m(1, 2);
  std::uniform_real_distribution<double> small(-0.5, 0.5);
  std::uniform_real_distribution<double> freq(0.5, 2.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> horizon(1.0, 5.0);

  const int d = dim_d(rng);
  const int m = dim_m(rng);
  const double T = horizon(rng);

  std::vector<tvanish::Expr> f;
  for (int i = 0; i < d; ++i) {
    std::string text = "0";
    for (int j = 0; j < d; ++j) {
      text += "+(" + num(small(rng)) + "+" + num(small(rng)) + "*sin(" + num(freq(rng)) + "*t))*x" +
              std::to_string(j + 1);
    }
    for (int k = 0; k < m; ++k)
      text += "+(" + num(unit(rng)) + "+" + num(small(rng)) + "*cos(t))*u" + std::to_string(k + 1);
    f.push_back(tvanish::parse(text));
  }
  std::string g = "0";
  for (int i = 0; i < d; ++i)
    g += "+(" + num(unit(rng)) + "+" + num(small(rng)) + "*cos(" + num(freq(rng)) + "*t))*x" + std::to_string(i + 1);
  for (int k = 0; k < m; ++k) g += "-u" + std::to_string(k + 1) + "^2";

  Vec lo = Vec::Constant(m, -1.0);
  Vec hi = Vec::Constant(m, 1.0);
  Vec x0(d);
  for (int i = 0; i < d; ++i) x0[i] = unit(rng);

  std::vector<double> breaks{0.0};
  std::uniform_real_distribution<double> when(0.05, 0.95);
  std::vector<double> inner{when(rng) * T, when(rng) * T, when(rng) * T};
  std::sort(inner.begin(), inner.end());
  for (double b : inner)
    if (b - breaks.back() > 1e-3) breaks.push_back(b);
  std::vector<Vec> values;
  for (std::size_t i = 0; i < breaks.size(); ++i) {
    Vec v(m);
    for (int k = 0; k < m; ++k) v[k] = unit(rng);
    values.push_back(v);
  }

  return {ControlProblem::from_exprs(std::move(f), tvanish::parse(g), ControlSet::box(lo, hi), x0),
          ControlSignal(breaks, values), T};
}

}  // namespace fixtures
