#include "tvanish/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "tvanish/errors.hpp"
#include "tvanish/format.hpp"

namespace tvanish {

namespace {

std::string where(const YAML::Node& n) {
  const YAML::Mark m = n.Mark();
  if (m.is_null()) return "";
  return " (line " + std::to_string(m.line + 1) + ")";
}

void only_keys(const YAML::Node& map, const std::string& ctx, const std::set<std::string>& allowed) {
  if (!map.IsMap()) throw ConfigError(ctx + " must be a mapping" + where(map));
  for (const auto& kv : map) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + ctx + where(kv.first));
  }
}

YAML::Node need(const YAML::Node& map, const std::string& key, const std::string& ctx) {
  const YAML::Node n = map[key];
  if (!n) throw ConfigError("missing key '" + key + "' in " + ctx + where(map));
  return n;
}

template <class T>
T scalar(const YAML::Node& n, const std::string& ctx) {
  if (!n.IsScalar()) throw ConfigError(ctx + " must be a scalar" + where(n));
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(ctx + ": cannot read '" + n.Scalar() + "'" + where(n));
  }
}

template <class T>
std::vector<T> list(const YAML::Node& n, const std::string& ctx) {
  if (!n.IsSequence()) throw ConfigError(ctx + " must be a list" + where(n));
  std::vector<T> out;
  for (std::size_t i = 0; i < n.size(); ++i) out.push_back(scalar<T>(n[i], ctx + "[" + std::to_string(i) + "]"));
  return out;
}

Vec vector_of(const YAML::Node& n, const std::string& ctx) {
  const std::vector<double> v = list<double>(n, ctx);
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

std::vector<Vec> vectors_of(const YAML::Node& n, const std::string& ctx) {
  if (!n.IsSequence()) throw ConfigError(ctx + " must be a list of lists" + where(n));
  std::vector<Vec> out;
  for (std::size_t i = 0; i < n.size(); ++i) out.push_back(vector_of(n[i], ctx + "[" + std::to_string(i) + "]"));
  return out;
}

template <class T>
void maybe(const YAML::Node& map, const std::string& key, const std::string& ctx, T& target) {
  if (const YAML::Node n = map[key]) target = scalar<T>(n, ctx + "." + key);
}

template <class T>
void maybe(const YAML::Node& map, const std::string& key, const std::string& ctx, std::optional<T>& target) {
  if (const YAML::Node n = map[key]) target = scalar<T>(n, ctx + "." + key);
}

TauSequence read_tau(const YAML::Node& n, const std::string& ctx) {
  only_keys(n, ctx, {"arithmetic", "geometric", "explicit"});
  if (n.size() != 1) throw ConfigError(ctx + " needs exactly one of arithmetic, geometric, explicit" + where(n));
  if (const YAML::Node a = n["arithmetic"]) {
    only_keys(a, ctx + ".arithmetic", {"t0", "d", "count"});
    return TauSequence::arithmetic(scalar<double>(need(a, "t0", ctx), ctx + ".t0"),
                                   scalar<double>(need(a, "d", ctx), ctx + ".d"),
                                   scalar<int>(need(a, "count", ctx), ctx + ".count"));
  }
  if (const YAML::Node g = n["geometric"]) {
    only_keys(g, ctx + ".geometric", {"t0", "r", "count"});
    return TauSequence::geometric(scalar<double>(need(g, "t0", ctx), ctx + ".t0"),
                                  scalar<double>(need(g, "r", ctx), ctx + ".r"),
                                  scalar<int>(need(g, "count", ctx), ctx + ".count"));
  }
  return TauSequence::from_values(list<double>(n["explicit"], ctx + ".explicit"));
}

void read_problem(const YAML::Node& n, RunConfig& cfg) {
  only_keys(n, "problem", {"state_dim", "control_dim", "f", "g", "x0", "growth_bound"});
  ProblemDefinition& def = cfg.problem;
  def.f = list<std::string>(need(n, "f", "problem"), "problem.f");
  def.g = scalar<std::string>(need(n, "g", "problem"), "problem.g");
  def.x_init = list<double>(need(n, "x0", "problem"), "problem.x0");
  def.state_dim = static_cast<int>(def.f.size());
  maybe(n, "state_dim", "problem", def.state_dim);
  maybe(n, "control_dim", "problem", def.control_dim);
  maybe(n, "growth_bound", "problem", def.growth_bound);
}

void read_control(const YAML::Node& n, RunConfig& cfg) {
  only_keys(n, "control", {"box", "points"});
  if (n.size() != 1) throw ConfigError("control needs exactly one of box, points" + where(n));
  if (const YAML::Node b = n["box"]) {
    only_keys(b, "control.box", {"lo", "hi"});
    cfg.problem.control_set = ControlSet::box(vector_of(need(b, "lo", "control.box"), "control.box.lo"),
                                              vector_of(need(b, "hi", "control.box"), "control.box.hi"));
  } else {
    cfg.problem.control_set = ControlSet::finite(vectors_of(n["points"], "control.points"));
  }
  if (cfg.problem.control_dim == 0) cfg.problem.control_dim = cfg.problem.control_set->dim();
}

void read_candidate(const YAML::Node& n, RunConfig& cfg) {
  only_keys(n, "candidate", {"constant", "breakpoints", "values"});
  if (const YAML::Node c = n["constant"]) {
    if (n["breakpoints"] || n["values"])
      throw ConfigError("candidate.constant excludes breakpoints and values" + where(n));
    cfg.candidate = ControlSignal::constant(vector_of(c, "candidate.constant"));
    return;
  }
  cfg.candidate = ControlSignal(list<double>(need(n, "breakpoints", "candidate"), "candidate.breakpoints"),
                                vectors_of(need(n, "values", "candidate"), "candidate.values"));
}

void read_solver(const YAML::Node& n, RunConfig& cfg) {
  only_keys(n, "solver",
            {"step", "horizon", "control_grid_n", "window", "tolerance", "stride", "eps_conv", "tail_k",
             "growth_ratio", "cluster_radius", "compacts", "improper_tail", "improper_at"});
  SolverConfig& s = cfg.solver;
  maybe(n, "step", "solver", s.step);
  maybe(n, "horizon", "solver", s.horizon);
  maybe(n, "control_grid_n", "solver", s.control_grid_n);
  maybe(n, "window", "solver", s.window);
  maybe(n, "tolerance", "solver", s.tolerance);
  maybe(n, "stride", "solver", s.stride);
  maybe(n, "eps_conv", "solver", s.classify.eps_conv);
  maybe(n, "tail_k", "solver", s.classify.tail_k);
  maybe(n, "growth_ratio", "solver", s.classify.growth_ratio);
  maybe(n, "cluster_radius", "solver", s.classify.cluster_radius);
  maybe(n, "improper_tail", "solver", s.improper_tail);
  if (const YAML::Node c = n["compacts"]) s.compacts = list<double>(c, "solver.compacts");
  if (const YAML::Node a = n["improper_at"]) s.improper_at = list<double>(a, "solver.improper_at");
  if (!(s.step > 0.0)) throw ConfigError("solver.step must be positive");
  if (s.control_grid_n < 1) throw ConfigError("solver.control_grid_n must be positive");
  if (!(s.window > 0.0)) throw ConfigError("solver.window must be positive");
  if (s.stride < 1) throw ConfigError("solver.stride must be positive");
}

void read_oracle(const YAML::Node& n, RunConfig& cfg) {
  only_keys(n, "oracle", {"state_box", "nodes_per_axis", "dt", "pieces", "random_controls", "control_grid_n", "tau"});
  OracleConfig& o = cfg.oracle;
  if (const YAML::Node b = n["state_box"]) {
    only_keys(b, "oracle.state_box", {"lo", "hi"});
    o.state_box = StateBox{vector_of(need(b, "lo", "oracle.state_box"), "oracle.state_box.lo"),
                           vector_of(need(b, "hi", "oracle.state_box"), "oracle.state_box.hi")};
  }
  maybe(n, "nodes_per_axis", "oracle", o.nodes_per_axis);
  maybe(n, "dt", "oracle", o.dt);
  maybe(n, "pieces", "oracle", o.pieces);
  maybe(n, "random_controls", "oracle", o.random_controls);
  maybe(n, "control_grid_n", "oracle", o.control_grid_n);
  if (const YAML::Node t = n["tau"]) o.tau = read_tau(t, "oracle.tau");
}

void read_structure(const YAML::Node& n, RunConfig& cfg) {
  only_keys(n, "structure", {"g1", "r", "f1", "S"});
  StructureConfig s;
  s.g1 = scalar<std::string>(need(n, "g1", "structure"), "structure.g1");
  s.r = scalar<std::string>(need(n, "r", "structure"), "structure.r");
  if (const YAML::Node f1 = n["f1"]) s.f1 = list<std::string>(f1, "structure.f1");
  if (const YAML::Node S = n["S"]) {
    if (!S.IsSequence()) throw ConfigError("structure.S must be a list of lists" + where(S));
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < S.size(); ++i)
      rows.push_back(list<std::string>(S[i], "structure.S[" + std::to_string(i) + "]"));
    s.S = std::move(rows);
  }
  cfg.structure = std::move(s);
}

}  // namespace

QuadStructure StructureConfig::build() const {
  QuadStructure q{parse(g1), parse(r), std::nullopt, std::nullopt};
  if (f1) {
    std::vector<Expr> e;
    for (const std::string& s : *f1) e.push_back(parse(s));
    q.f1 = std::move(e);
  }
  if (S) {
    std::vector<std::vector<Expr>> rows;
    for (const auto& row : *S) {
      std::vector<Expr> r_;
      for (const std::string& s : row) r_.push_back(parse(s));
      rows.push_back(std::move(r_));
    }
    q.S = std::move(rows);
  }
  return q;
}

double RunConfig::horizon() const {
  if (!solver.horizon && !tau) throw ConfigError("no horizon: set solver.horizon or a tau section");
  const double T = solver.horizon ? *solver.horizon : tau->back();
  if (!(T > 0.0)) throw ConfigError("horizon must be positive");
  if (tau && T < tau->back())
    throw ConfigError("horizon " + format_double(T) + " is shorter than the last tau " + format_double(tau->back()));
  return T;
}

const ControlSignal& RunConfig::require_candidate() const {
  if (!candidate) throw ConfigError("missing candidate section");
  return *candidate;
}

const TauSequence& RunConfig::require_tau() const {
  if (!tau) throw ConfigError("missing tau section");
  return *tau;
}

RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("malformed YAML: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("config must be a mapping of sections");
  only_keys(root, "config", {"problem", "control", "candidate", "tau", "solver", "oracle", "structure", "verify", "seed"});

  RunConfig cfg;
  read_problem(need(root, "problem", "config"), cfg);
  read_control(need(root, "control", "config"), cfg);
  if (const YAML::Node c = root["candidate"]) read_candidate(c, cfg);
  if (const YAML::Node t = root["tau"]) cfg.tau = read_tau(t, "tau");
  if (const YAML::Node s = root["solver"]) read_solver(s, cfg);
  if (const YAML::Node o = root["oracle"]) read_oracle(o, cfg);
  if (const YAML::Node s = root["structure"]) read_structure(s, cfg);
  if (const YAML::Node v = root["verify"]) {
    only_keys(v, "verify", {"assume_strictly_convex"});
    maybe(v, "assume_strictly_convex", "verify", cfg.assume_strictly_convex);
  }
  maybe(root, "seed", "config", cfg.seed);

  if (cfg.candidate && cfg.candidate->dim() != cfg.problem.control_dim)
    throw ConfigError("candidate dimension " + std::to_string(cfg.candidate->dim()) + " differs from control_dim " +
                      std::to_string(cfg.problem.control_dim));
  if (cfg.oracle.state_box &&
      (cfg.oracle.state_box->lo.size() != cfg.problem.state_dim ||
       cfg.oracle.state_box->hi.size() != cfg.problem.state_dim))
    throw ConfigError("oracle.state_box dimension differs from state_dim");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string halkin_config(const HalkinParams& params) {
  params.validate();
  const std::string a = format_double(params.alpha);
  const std::string b = format_double(params.beta);
  const std::string x = format_double(params.x_init);
  std::ostringstream out;
  const double lo = params.x_init * std::min(1.0, std::exp(3 * params.alpha)) / 2;
  const double hi = std::ceil(50 * params.x_init * std::exp(3 * std::max(params.alpha, 0.0)));
  const int nodes = static_cast<int>(std::clamp(std::ceil((hi - lo) / (10 * params.x_init)), 100.0, 2000.0)) * 2 + 1;
  out << "# Halkin example: x' = u x, g = (1 - u) x, u in [" << a << ", " << b << "], candidate u = " << a << "\n"
      << "problem:\n"
      << "  f: [\"u1*x1\"]\n"
      << "  g: \"(1-u1)*x1\"\n"
      << "  x0: [" << x << "]\n"
      << "control:\n"
      << "  box: {lo: [" << a << "], hi: [" << b << "]}\n"
      << "candidate:\n"
      << "  constant: [" << a << "]\n"
      << "tau:\n"
      << "  arithmetic: {t0: 1, d: 1, count: 10}\n"
      << "solver:\n"
      << "  step: 0.001\n"
      << "  control_grid_n: 11\n"
      << "  stride: 10\n"
      << "oracle:\n"
      << "  state_box: {lo: [" << format_double(lo) << "], hi: [" << format_double(hi) << "]}\n"
      << "  nodes_per_axis: " << nodes << "\n"
      << "  control_grid_n: 3\n"
      << "  dt: 0.001\n"
      << "  tau:\n"
      << "    explicit: [1, 2, 3]\n"
      << "seed: 0\n";
  return out.str();
}

}  // namespace tvanish
