#include "tvanish/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tvanish/errors.hpp"
#include "tvanish/format.hpp"

namespace tvanish {

namespace {

using Json = nlohmann::ordered_json;

constexpr double kEndpointTol = 1e-5;
constexpr std::size_t kListedViolations = 10;

Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json to_json(const std::optional<Vec>& v) { return v ? to_json(*v) : Json(nullptr); }

Json to_json(const CheckEntry& e) {
  Json j;
  j["name"] = e.name;
  j["pass"] = e.pass;
  j["enforced"] = e.enforced;
  j["tolerance"] = e.tolerance;
  std::optional<std::size_t> worst;
  Json violations = Json::array();
  std::size_t count = 0;
  auto where = [&](std::size_t k) { return k < e.locations.size() ? e.locations[k] : static_cast<double>(k); };
  for (std::size_t k = 0; k < e.residuals.size(); ++k) {
    if (!worst || !(e.residuals[k] <= e.residuals[*worst])) worst = k;
    if (!(e.residuals[k] <= e.tolerance)) {
      ++count;
      if (violations.size() < kListedViolations) violations.push_back(where(k));
    }
  }
  j["max_residual"] = worst ? Json(e.residuals[*worst]) : Json(nullptr);
  j["at"] = worst ? Json(where(*worst)) : Json(nullptr);
  j["violations"] = count;
  j["first_violations"] = violations;
  Json extra = Json::object();
  for (const auto& [k, v] : e.extra) extra[k] = v;
  j["extra"] = extra;
  j["note"] = e.note;
  return j;
}

std::vector<double> mandatory_times(const RunConfig& cfg, double T) {
  std::set<double> times;
  if (cfg.tau)
    for (double t : cfg.tau->values()) times.insert(t);
  for (double t : cfg.solver.improper_at)
    if (t > 0.0 && t <= T) times.insert(t);
  if (cfg.solver.improper_tail && *cfg.solver.improper_tail <= T) times.insert(*cfg.solver.improper_tail);
  return {times.begin(), times.end()};
}

struct Run {
  ControlProblem problem;
  Trajectory traj;
};

Run simulate(const RunConfig& cfg) {
  ControlProblem p = build_problem(cfg.problem);
  const ControlSignal& u = cfg.require_candidate();
  u.check_admissible(p.control_set());
  const double T = cfg.horizon();
  const std::vector<double> times = mandatory_times(cfg, T);
  Trajectory traj = integrate_state(p, u, T, cfg.solver.step, times);
  return {std::move(p), std::move(traj)};
}

VanishingCertificate certify(const RunConfig& cfg, const Run& run) {
  VanishOptions opts;
  opts.classify = cfg.solver.classify;
  opts.compacts = cfg.solver.compacts;
  return extract_certificate(run.problem, run.traj, cfg.require_candidate(), cfg.require_tau(), opts);
}

MultiplierArc truncated_arc(const Trajectory& traj, const PerTau& pn) {
  MultiplierArc arc = adjoint_via_cauchy(traj, pn.lambda_n, pn.psi_n_init);
  const std::size_t end = traj.index_of(pn.tau) + 1;
  arc.grid.resize(end);
  arc.psi.resize(end);
  return arc;
}

CheckEntry undetermined_entry(const std::string& name, double tol) {
  CheckEntry e;
  e.name = name;
  e.tolerance = tol;
  e.note = "certificate undetermined";
  return e;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw Error("cannot write '" + path.string() + "'");
}

}  // namespace

void run_simulate(const RunConfig& cfg, std::ostream& csv) { write_trajectory_csv(csv, simulate(cfg).traj); }

void run_vanish(const RunConfig& cfg, std::ostream& json, std::ostream* convergence_csv) {
  const Run run = simulate(cfg);
  const VanishingCertificate cert = certify(cfg, run);
  const TauSequence& tau = cfg.require_tau();

  Json j;
  j["case"] = to_string(cert.kind);
  j["lambda0"] = cert.determined() ? Json(cert.lambda0) : Json(nullptr);
  j["psi0_init"] = cert.determined() ? to_json(cert.psi0_init) : Json(nullptr);
  j["I_star"] = to_json(cert.I_star);
  j["direction"] = to_json(cert.direction);
  j["subsequence"] = cert.subsequence;
  Json clusters = Json::array();
  for (const Cluster& c : cert.clusters) clusters.push_back({{"center", to_json(c.center)}, {"members", c.members}});
  j["clusters"] = clusters;
  j["eps_conv"] = cert.eps_conv;
  j["tail_k"] = cert.tail_k;
  j["growth_ratio"] = cert.growth_ratio;

  Json per_n = Json::array();
  for (std::size_t n = 0; n < cert.per_n.size(); ++n) {
    const PerTau& pn = cert.per_n[n];
    Json row;
    row["n"] = n + 1;
    row["tau"] = pn.tau;
    row["lambda_n"] = pn.lambda_n;
    row["psi_n_init"] = to_json(pn.psi_n_init);
    row["I_norm"] = pn.I_norm;
    row["psi_hat_init"] = to_json(pn.psi_hat_init);
    row["endpoint_residual"] = pn.endpoint_residual;
    if (n < cert.psi0_at_tau.size()) {
      row["psi0_at_tau"] = to_json(cert.psi0_at_tau[n]);
      row["psi0_A_at_tau"] = to_json(cert.psi0_A_at_tau[n]);
    }
    per_n.push_back(row);
  }
  j["per_n"] = per_n;

  const double tail = cfg.solver.improper_tail ? *cfg.solver.improper_tail : run.traj.horizon();
  Json improper;
  improper["tail_T"] = tail;
  Json points = Json::array();
  bool divergent = false;
  for (double T : cfg.solver.improper_at) {
    const ImproperIntegral ii = adjoint_improper_integral(run.problem, run.traj, T, tail);
    divergent = divergent || ii.divergent;
    points.push_back({{"T", T},
                      {"psi_T", to_json(ii.psi_T)},
                      {"tail_estimate", ii.tail_estimate},
                      {"half_tail_estimate", ii.half_tail_estimate},
                      {"divergent", ii.divergent}});
  }
  improper["points"] = points;
  improper["divergent"] = divergent;
  j["improper_integral"] = improper;

  Json limit = Json::array();
  if (cert.limit_arc) {
    for (double T : cfg.solver.improper_at) {
      const std::size_t k = run.traj.index_of(T);
      limit.push_back({{"T", T}, {"lambda", cert.limit_arc->lambda}, {"psi", to_json(cert.limit_arc->psi[k])}});
    }
  }
  j["limit_arc_at"] = limit;
  json << j.dump(2) << '\n';

  if (convergence_csv) {
    *convergence_csv << "K,n,tau,distance\n";
    for (const CompactConvergence& c : cert.convergence)
      for (std::size_t i = 0; i < c.n.size(); ++i)
        *convergence_csv << format_double(c.K) << ',' << c.n[i] + 1 << ',' << format_double(tau[c.n[i]]) << ','
                         << format_double(c.distance[i]) << '\n';
  }
}

bool run_verify(const RunConfig& cfg, std::ostream& json) {
  const Run run = simulate(cfg);
  const VanishingCertificate cert = certify(cfg, run);
  const ControlSignal& u = cfg.require_candidate();
  const TauSequence& tau = cfg.require_tau();
  const SolverConfig& s = cfg.solver;
  const double tol = s.tolerance;
  ConditionReport report;

  if (cert.limit_arc) {
    const MaxResidual mr = maximum_residual(run.problem, run.traj, u, *cert.limit_arc, s.control_grid_n, s.stride);
    CheckEntry e;
    e.name = "max_condition";
    e.tolerance = tol;
    e.residuals = mr.profile;
    e.locations = mr.times;
    e.pass = mr.sup <= tol;
    e.extra = {{"sup", mr.sup}, {"sup_time", mr.sup_time}, {"discretization_bound", mr.discretization_bound}};
    report.entries.push_back(std::move(e));
  } else {
    report.entries.push_back(undetermined_entry("max_condition", tol));
  }

  {
    CheckEntry e;
    e.name = "max_condition_truncated";
    e.tolerance = tol;
    double endpoint = 0.0, bound = 0.0;
    for (const PerTau& pn : cert.per_n) {
      const MaxResidual mr =
          maximum_residual(run.problem, run.traj, u, truncated_arc(run.traj, pn), s.control_grid_n, s.stride);
      e.residuals.push_back(mr.sup);
      e.locations.push_back(pn.tau);
      endpoint = std::max(endpoint, mr.profile.back());
      bound = std::max(bound, mr.discretization_bound);
    }
    e.pass = std::all_of(e.residuals.begin(), e.residuals.end(), [&](double r) { return r <= tol; });
    e.extra = {{"endpoint_max", endpoint}, {"discretization_bound", bound}};
    report.entries.push_back(std::move(e));
  }

  {
    CheckEntry e;
    e.name = "truncated_endpoint";
    e.tolerance = kEndpointTol;
    for (const PerTau& pn : cert.per_n) {
      e.residuals.push_back(pn.endpoint_residual);
      e.locations.push_back(pn.tau);
    }
    e.pass = std::all_of(e.residuals.begin(), e.residuals.end(), [](double r) { return r <= kEndpointTol; });
    report.entries.push_back(std::move(e));
  }

  {
    CheckEntry e;
    e.name = "endpoint_gain";
    e.tolerance = tol;
    for (double t : tau.values()) {
      const EndpointGain g = endpoint_gain_residual(run.problem, run.traj, u, t, s.window, s.control_grid_n);
      e.residuals.push_back(g.residual);
      e.locations.push_back(t);
    }
    e.pass = std::all_of(e.residuals.begin(), e.residuals.end(), [&](double r) { return r <= tol; });
    e.extra = {{"window", s.window}};
    report.entries.push_back(std::move(e));
  }

  if (cert.determined())
    report.entries.push_back(check_normalization(cert.lambda0, cert.psi0_init, NormalizationMode::Dob));
  else
    report.entries.push_back(undetermined_entry("normalization_dob", 1e-9));

  {
    CheckEntry e;
    e.name = "normalization_dob_kk";
    e.tolerance = 1e-9;
    e.pass = true;
    for (const PerTau& pn : cert.per_n) {
      const CheckEntry one = check_normalization(pn.lambda_n, pn.psi_n_init, NormalizationMode::DobKK);
      e.residuals.push_back(one.residuals.front());
      e.locations.push_back(pn.tau);
      e.pass = e.pass && one.pass;
    }
    report.entries.push_back(std::move(e));
  }

  CheckEntry strict = check_strict_convexity_consequence(cert, tol);
  strict.enforced = cfg.assume_strictly_convex;
  report.entries.push_back(std::move(strict));

  if (cfg.structure)
    report.entries.push_back(
        check_quadratic_control_remarks(run.problem, u, cert, tau, cfg.structure->build(), tol));

  const bool pass = report.passed();
  Json j;
  j["verdict"] = pass ? "PASS" : "FAIL";
  j["case"] = to_string(cert.kind);
  Json entries = Json::array();
  for (const CheckEntry& e : report.entries) entries.push_back(to_json(e));
  j["entries"] = entries;
  json << j.dump(2) << '\n';
  return pass;
}

bool run_oracle(const RunConfig& cfg, std::ostream& csv) {
  const ControlProblem p = build_problem(cfg.problem);
  const ControlSignal& u = cfg.require_candidate();
  u.check_admissible(p.control_set());
  const TauSequence& tau = cfg.oracle.tau ? *cfg.oracle.tau : cfg.require_tau();
  if (!cfg.oracle.state_box) throw ConfigError("missing oracle.state_box");
  OracleOptions o;
  o.box = *cfg.oracle.state_box;
  o.nodes_per_axis = cfg.oracle.nodes_per_axis;
  o.dt = cfg.oracle.dt;
  o.control_grid_n = cfg.oracle.control_grid_n ? *cfg.oracle.control_grid_n : cfg.solver.control_grid_n;
  o.pieces = cfg.oracle.pieces;
  o.step = cfg.solver.step;
  o.random_controls = cfg.oracle.random_controls;
  o.seed = cfg.seed;
  const OracleReport report = strong_optimality_test(p, u, tau, o);
  write_margins_csv(csv, report);
  return report.pass;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Truncated-horizon multipliers and vanishing certificates"};
  app.name("tvanish");
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  double step = 0.0, horizon = 0.0;
  std::vector<CLI::Option*> step_opts, horizon_opts;
  std::vector<CLI::App*> runs;
  for (const char* name : {"simulate", "vanish", "verify", "oracle"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("config,--config", config_path, "run configuration (YAML)");
    sub->add_option("--out", out_dir, "output directory");
    step_opts.push_back(sub->add_option("--step", step, "integration step override"));
    horizon_opts.push_back(sub->add_option("--horizon", horizon, "horizon override"));
    runs.push_back(sub);
  }
  runs[0]->description("integrate the candidate and write the trajectory CSV");
  runs[1]->description("extract the vanishing certificate");
  runs[2]->description("check the maximum principle conditions");
  runs[3]->description("compare the candidate with the value oracle");

  HalkinParams hp;
  CLI::App* halkin = app.add_subcommand("halkin", "write a config for the Halkin example");
  halkin->add_option("--alpha", hp.alpha, "lower control bound and candidate")->required();
  halkin->add_option("--beta", hp.beta, "upper control bound")->required();
  halkin->add_option("--x0", hp.x_init, "initial state")->default_val(1.0);
  halkin->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    std::filesystem::path dir;
    if (!out_dir.empty()) {
      dir = out_dir;
      std::filesystem::create_directories(dir);
    }
    auto emit = [&](const std::string& file, const std::string& text) {
      if (out_dir.empty()) out << text;
      else write_file(dir / file, text);
    };

    if (halkin->parsed()) {
      emit("halkin.yaml", halkin_config(hp));
      return kExitOk;
    }

    std::size_t which = 0;
    while (!runs[which]->parsed()) ++which;
    if (config_path.empty()) throw ConfigError("no config file given");
    RunConfig cfg = load_config(config_path);
    if (step_opts[which]->count()) {
      if (!(step > 0.0)) throw ConfigError("--step must be positive");
      cfg.solver.step = step;
    }
    if (horizon_opts[which]->count()) cfg.solver.horizon = horizon;

    std::ostringstream main_out;
    int code = kExitOk;
    switch (which) {
      case 0:
        run_simulate(cfg, main_out);
        emit("trajectory.csv", main_out.str());
        break;
      case 1: {
        std::ostringstream conv;
        run_vanish(cfg, main_out, &conv);
        emit("certificate.json", main_out.str());
        if (!out_dir.empty()) write_file(dir / "convergence.csv", conv.str());
        break;
      }
      case 2:
        if (!run_verify(cfg, main_out)) code = kExitVerifyFail;
        emit("report.json", main_out.str());
        break;
      default:
        if (!run_oracle(cfg, main_out)) code = kExitVerifyFail;
        emit("margins.csv", main_out.str());
        break;
    }
    if (code == kExitVerifyFail) err << "verdict: FAIL\n";
    return code;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DimensionError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const StructureError& e) {
    err << "structure error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DiffError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace tvanish
