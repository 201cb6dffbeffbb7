#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "tvanish/problem.hpp"

using namespace tvanish;
using fixtures::vec;

namespace {

ProblemDefinition halkin_definition(double alpha, double beta) {
  ProblemDefinition def;
  def.state_dim = 1;
  def.control_dim = 1;
  def.f = {"u1*x1"};
  def.g = "(1-u1)*x1";
  def.x_init = {1.0};
  def.control_set = ControlSet::box(vec({alpha}), vec({beta}));
  return def;
}

}  // namespace

TEST_CASE("build_problem differentiates f and g") {
  const ControlProblem p = build_problem(halkin_definition(1.0, 2.0));
  CHECK(p.state_dim() == 1);
  CHECK(p.control_dim() == 1);
  CHECK(to_string(p.f_x()[0][0]) == "u1");
  CHECK(to_string(p.g_x()[0]) == "1-u1");
  CHECK(p.x_init()[0] == 1.0);

  ProblemDefinition trivial;
  trivial.state_dim = 1;
  trivial.control_dim = 1;
  trivial.f = {"0"};
  trivial.g = "x1";
  trivial.x_init = {5.0};
  trivial.control_set = ControlSet::box(vec({0.0}), vec({1.0}));
  const ControlProblem q = build_problem(trivial);
  CHECK(to_string(q.f_x()[0][0]) == "0");
  CHECK(to_string(q.g_x()[0]) == "1");
}

TEST_CASE("build_problem is deterministic") {
  const ControlProblem a = build_problem(halkin_definition(1.0, 2.0));
  const ControlProblem b = build_problem(halkin_definition(1.0, 2.0));
  CHECK(a.f()[0] == b.f()[0]);
  CHECK(a.g() == b.g());
  CHECK(a.f_x()[0][0] == b.f_x()[0][0]);
  CHECK(a.g_x()[0] == b.g_x()[0]);
}

TEST_CASE("build_problem rejects inconsistent definitions") {
  ProblemDefinition def;
  def.state_dim = 2;
  def.control_dim = 1;
  def.f = {"x2", "-x1+u1"};
  def.g = "x3";
  def.x_init = {0.0, 0.0};
  def.control_set = ControlSet::box(vec({-1.0}), vec({1.0}));
  CHECK_THROWS_AS(build_problem(def), DimensionError);

  def.g = "x1*u2";
  CHECK_THROWS_AS(build_problem(def), DimensionError);

  def.g = "x1";
  def.x_init = {0.0};
  CHECK_THROWS_AS(build_problem(def), DimensionError);

  def.x_init = {0.0, 0.0};
  def.f = {"x2"};
  CHECK_THROWS_AS(build_problem(def), DimensionError);

  def.f = {"x2", "abs(x1)"};
  CHECK_THROWS_AS(build_problem(def), DiffError);

  def.f = {"x2", "x1 +"};
  CHECK_THROWS_AS(build_problem(def), ParseError);

  def.f = {"x2", "-x1+u1"};
  def.control_set.reset();
  CHECK_THROWS_AS(build_problem(def), DimensionError);
}

TEST_CASE("control sets") {
  CHECK_THROWS_AS(ControlSet::box(vec({2.0}), vec({1.0})), DimensionError);
  CHECK_THROWS_AS(ControlSet::finite({}), DimensionError);
  CHECK_THROWS_AS(ControlSet::finite({vec({0.0}), vec({1.0, 2.0})}), DimensionError);

  const ControlSet box = ControlSet::box(vec({0.0, -1.0}), vec({1.0, 1.0}));
  CHECK(box.contains(vec({0.5, 0.0})));
  CHECK_FALSE(box.contains(vec({1.5, 0.0})));
  CHECK_FALSE(box.contains(vec({0.5})));

  const ControlSet fin = ControlSet::finite({vec({0.0, 0.0}), vec({1.0, 1.0})});
  CHECK(fin.contains(vec({1.0, 1.0 + 1e-13})));
  CHECK_FALSE(fin.contains(vec({0.5, 0.5})));
}

TEST_CASE("sample_control_grid") {
  const auto line = sample_control_grid(ControlSet::box(vec({1.0}), vec({2.0})), 3);
  REQUIRE(line.size() == 3);
  CHECK(line[0][0] == 1.0);
  CHECK(line[1][0] == 1.5);
  CHECK(line[2][0] == 2.0);

  const auto fin = sample_control_grid(ControlSet::finite({vec({0.0, 0.0}), vec({1.0, 1.0})}), 7);
  REQUIRE(fin.size() == 2);
  CHECK(fin[0] == vec({0.0, 0.0}));
  CHECK(fin[1] == vec({1.0, 1.0}));

  const auto square = sample_control_grid(ControlSet::box(vec({0.0, 0.0}), vec({1.0, 1.0})), 2);
  REQUIRE(square.size() == 4);
  CHECK(square[0] == vec({0.0, 0.0}));
  CHECK(square[1] == vec({0.0, 1.0}));
  CHECK(square[2] == vec({1.0, 0.0}));
  CHECK(square[3] == vec({1.0, 1.0}));

  const auto degenerate = sample_control_grid(ControlSet::box(vec({1.0}), vec({1.0})), 5);
  CHECK(degenerate.size() == 1);

  CHECK_THROWS_AS(sample_control_grid(ControlSet::box(vec({0.0}), vec({1.0})), 1), DimensionError);
}

TEST_CASE("property: box lattices stay inside the box and contain both corners per axis") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lo(-3.0, 0.0);
  std::uniform_real_distribution<double> width(0.1, 4.0);
  std::uniform_int_distribution<int> dims(1, 3);
  std::uniform_int_distribution<int> per_axis(2, 7);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = dims(rng);
    Vec a(m), b(m);
    for (int i = 0; i < m; ++i) {
      a[i] = lo(rng);
      b[i] = a[i] + width(rng);
    }
    const ControlSet box = ControlSet::box(a, b);
    const int n = per_axis(rng);
    const auto grid = sample_control_grid(box, n);
    CHECK(grid.size() == static_cast<std::size_t>(std::pow(n, m)));
    for (const auto& p : grid) CHECK(box.contains(p, 0.0));
    CHECK(grid.front() == a);
    CHECK(grid.back() == b);
  }
}

TEST_CASE("control signals") {
  const ControlSignal u({0.0, 1.0, 2.5}, {vec({1.0}), vec({2.0}), vec({3.0})});
  CHECK(u.at(0.0)[0] == 1.0);
  CHECK(u.at(0.999)[0] == 1.0);
  CHECK(u.at(1.0)[0] == 2.0);
  CHECK(u.at(100.0)[0] == 3.0);
  CHECK(u.left_limit(1.0)[0] == 1.0);
  CHECK(u.left_limit(2.5)[0] == 2.0);
  CHECK(u.left_limit(3.0)[0] == 3.0);
  CHECK(u.left_limit(0.0)[0] == 1.0);

  CHECK_THROWS_AS(ControlSignal({0.5}, {vec({1.0})}), DimensionError);
  CHECK_THROWS_AS(ControlSignal({0.0, 0.0}, {vec({1.0}), vec({2.0})}), DimensionError);
  CHECK_THROWS_AS(ControlSignal({0.0}, {vec({1.0}), vec({2.0})}), DimensionError);

  const ControlSet box = ControlSet::box(vec({1.0}), vec({2.5}));
  CHECK_THROWS_AS(u.check_admissible(box), DimensionError);
  CHECK_NOTHROW(ControlSignal::constant(vec({2.5})).check_admissible(box));
}

TEST_CASE("validate_growth") {
  // |u x| / (1 + |x|) <= beta * 10 / 11 on x in [0, 10]
  const ControlProblem halkin = build_problem(halkin_definition(1.0, 2.0));
  const GrowthReport r = validate_growth(halkin, vec({0.0}), vec({10.0}), 10.0, 4096);
  CHECK(r.estimated_M == doctest::Approx(20.0 / 11.0).epsilon(1e-12));
  CHECK(r.estimated_M <= 2.0);
  CHECK(r.violations.empty());

  ProblemDefinition with_bound = halkin_definition(1.0, 2.0);
  with_bound.growth_bound = 2.0;
  CHECK(validate_growth(build_problem(with_bound), vec({0.0}), vec({10.0}), 10.0, 4096).violation_count == 0);

  with_bound.growth_bound = 0.5;
  const GrowthReport bad = validate_growth(build_problem(with_bound), vec({0.0}), vec({10.0}), 10.0, 4096);
  CHECK(bad.violation_count > 0);
  CHECK_FALSE(bad.violations.empty());
  CHECK(bad.violations.front().ratio > 0.5);

  const ControlProblem still = fixtures::scalar("0", "x1", 5.0);
  CHECK(validate_growth(still, vec({-5.0}), vec({5.0}), 3.0, 100).estimated_M == 0.0);

  CHECK_THROWS_AS(validate_growth(still, vec({-5.0}), vec({5.0}), 3.0, 0), DimensionError);
  CHECK_THROWS_AS(validate_growth(fixtures::scalar("log(x1)", "0", 1.0), vec({0.0}), vec({2.0}), 1.0, 10),
                  EvalError);
}
