#include "fxts/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fxts/errors.hpp"

namespace fxts {

namespace {

using json = nlohmann::ordered_json;

Eigen::VectorXd broadcast(const Eigen::VectorXd& v, int m, const char* name) {
  if (v.size() == m) return v;
  if (v.size() == 1) return Eigen::VectorXd::Constant(m, v(0));
  throw ConfigError(std::string("[gains] ") + name + " needs 1 or " + std::to_string(m) +
                    " entries");
}

void apply(const FxtsGainOverrides& o, int m, FxtsGains& g) {
  if (o.alpha) g.alpha = broadcast(*o.alpha, m, "alpha");
  if (o.beta) g.beta = broadcast(*o.beta, m, "beta");
  if (o.p) g.p = *o.p;
  if (o.q) g.q = *o.q;
  if (o.rho) g.rho = *o.rho;
  if (o.eta_bar) g.eta_bar = *o.eta_bar;
  if (o.boundary_layer) g.boundary_layer = *o.boundary_layer;
  if (o.norm_epsilon) g.norm_epsilon = *o.norm_epsilon;
  if (o.switching) g.switching = *o.switching;
  if (o.high_order) g.high_order = *o.high_order;
}

void apply(const ConvexGainOverrides& o, ConvexFlowGains& g) {
  if (o.gamma1) g.gamma1 = *o.gamma1;
  if (o.gamma2) g.gamma2 = *o.gamma2;
  if (o.r1) g.r1 = *o.r1;
  if (o.r2) g.r2 = *o.r2;
  if (o.epsilon) g.epsilon = *o.epsilon;
  if (o.mu) g.mu = *o.mu;
  if (o.high_order) g.high_order = *o.high_order;
}

template <typename Fn>
auto as_config_error(Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidNetwork&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
}

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json vec(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string());
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

double time_or_inf(const std::optional<double>& t) {
  return t.value_or(std::numeric_limits<double>::infinity());
}

}  // namespace

ScenarioSetup build_setup(const RunConfig& config) {
  return as_config_error([&] {
    ScenarioSetup setup{config, build_sphere(), std::nullopt, std::nullopt};
    const std::string& name = config.scenario;
    if (name == "sphere") {
      // already built
    } else if (name == "acopf3") {
      setup.instance = build_acopf3(config.acopf);
    } else if (name == "estimation") {
      EstimationOptions opts;
      opts.node_count = config.estimation.nodes;
      opts.truth = config.estimation.truth;
      opts.noise_variance = config.estimation.noise_variance;
      opts.add_noise = config.estimation.noise;
      opts.seed = config.seed;
      if (config.estimation.edges) {
        opts.laplacian = laplacian_from_edges(config.estimation.nodes, *config.estimation.edges);
      }
      setup.network = make_estimation_network(opts);
      setup.instance = build_estimation(*setup.network);
    } else if (name == "convex-quadratic") {
      setup.instance = build_convex_quadratic(config.quadratic.mu, config.quadratic.center,
                                              config.quadratic.normal);
    } else {
      throw ConfigError("unknown scenario '" + name + "'");
    }

    ScenarioInstance& inst = setup.instance;
    const int m = inst.problem.m();
    apply(config.gains, m, inst.fxts);
    apply(config.convex, inst.convex);
    if (config.law) inst.law.kind = *config.law;
    inst.law.mu_pgf = config.baseline_mu;
    if (config.x0) {
      if (config.x0->size() != inst.problem.n()) {
        throw ConfigError("[scenario] x0 needs " + std::to_string(inst.problem.n()) + " entries");
      }
      inst.x0 = *config.x0;
    }
    if (config.disturbance) {
      const double amp = config.disturbance->amplitude;
      const double freq = config.disturbance->frequency;
      const double bound = config.disturbance->bound.value_or(amp * std::sqrt(double(m)));
      if (bound < 0.0) throw ConfigError("[disturbance] bound must be non-negative");
      setup.disturbance = DisturbanceSpec{
          [amp, freq, m](double t, const Eigen::VectorXd&) -> Eigen::VectorXd {
            return Eigen::VectorXd::Constant(m, amp * std::sin(freq * t));
          },
          bound};
    }
    config.integration.validate();
    return setup;
  });
}

TheoreticalBounds theoretical_bounds(const ScenarioSetup& setup) {
  const ScenarioInstance& inst = setup.instance;
  TheoreticalBounds b;
  switch (inst.law.kind) {
    case LawKind::kNonconvexFxts:
      b.t_c = settling_bound_nonconvex(inst.fxts);
      break;
    case LawKind::kRobustFxts:
      b.t_c = settling_bound_robust(inst.fxts);
      break;
    case LawKind::kConvexFxts: {
      const ConvexSettlingBound cb =
          settling_bound_convex(inst.fxts, inst.convex, setup.config.bound_form);
      b.t_c = cb.t_c;
      b.t_o = cb.t_o;
      b.t_total = cb.t_total;
      break;
    }
    case LawKind::kProjectedGradientBaseline:
      break;
  }
  return b;
}

std::optional<OracleReference> scenario_oracle(const ScenarioSetup& setup) {
  const std::string& name = setup.config.scenario;
  if (name == "acopf3") {
    const AcopfReference ref = acopf_feasible_oracle(setup.config.acopf);
    return OracleReference{ref.x, ref.objective};
  }
  if (name == "estimation") {
    return OracleReference{centralized_ls_oracle(*setup.network), std::nullopt};
  }
  if (name == "convex-quadratic") {
    return OracleReference{setup.config.quadratic.center, 0.0};
  }
  return std::nullopt;
}

double max_node_error(const Eigen::VectorXd& x, const Eigen::VectorXd& target) {
  const Eigen::Index d = target.size();
  if (d == 0 || x.size() % d != 0) throw InvalidInput("state is not a stack of node estimates");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); i += d) {
    worst = std::max(worst, (x.segment(i, d) - target).norm());
  }
  return worst;
}

RunResult execute_run(const ScenarioSetup& setup) {
  const auto start = std::chrono::steady_clock::now();
  const ScenarioInstance& inst = setup.instance;
  const IntegrationConfig& ic = setup.config.integration;

  RunResult res;
  res.trajectory = simulate(inst.problem, inst.law, inst.x0, inst.fxts, inst.convex,
                            setup.disturbance_ptr(), ic);
  const Trajectory& tr = res.trajectory;
  RunReport& rep = res.report;
  rep.scenario = setup.config.scenario;
  rep.law = std::string(law_name(inst.law.kind));
  rep.fxts = inst.fxts;
  rep.convex = inst.convex;
  rep.bounds = theoretical_bounds(setup);
  rep.reach_time = tr.reach_time;
  rep.kkt_time = tr.kkt_time;

  const Eigen::VectorXd& xf = tr.states.back();
  rep.terminal_feasibility = inf_norm(inst.problem.constraints(xf));
  rep.terminal_stationarity = tr.stationarity.back();
  rep.terminal_objective = tr.objective.back();

  // Chattering allowance for a disturbed run.
  const double feas_tol = ic.reach_tol + (setup.disturbance ? 10.0 * ic.step : 0.0);
  rep.checks.push_back({"reached", rep.reach_time.has_value()});
  if (rep.bounds.t_c) {
    rep.checks.push_back({"reach_time<=T_c", rep.reach_time && *rep.reach_time <= *rep.bounds.t_c});
  }
  rep.checks.push_back({"terminal_feasibility", rep.terminal_feasibility <= feas_tol});
  if (setup.config.tolerances.stationarity) {
    rep.checks.push_back(
        {"terminal_stationarity", rep.terminal_stationarity <= *setup.config.tolerances.stationarity});
  }

  if (const auto ref = scenario_oracle(setup)) {
    const double tol = setup.config.tolerances.oracle.value_or(1e-3);
    if (rep.scenario == "acopf3") {
      rep.oracle.push_back({"objective", *ref->objective, rep.terminal_objective,
                            std::abs(rep.terminal_objective - *ref->objective)});
      rep.oracle.push_back({"Pg3", ref->x(4), xf(4), std::abs(xf(4) - ref->x(4))});
      rep.checks.push_back({"oracle_objective", rep.oracle[0].abs_error <= tol});
      rep.checks.push_back({"oracle_Pg3", rep.oracle[1].abs_error <= tol});
    } else {
      // Estimation stacks node estimates; the quadratic is a single node.
      std::vector<double> err(tr.size());
      for (std::size_t k = 0; k < tr.size(); ++k) err[k] = max_node_error(tr.states[k], ref->x);
      rep.oracle.push_back({"max_node_error", 0.0, err.back(), err.back()});
      rep.oracle_time = first_sustained_time(tr.times, err, tol,
                                             ic.sustain_steps * ic.step);
      rep.checks.push_back({"oracle_state", err.back() <= tol});
      if (rep.bounds.t_total) {
        rep.checks.push_back(
            {"oracle_time<=T_total", rep.oracle_time && *rep.oracle_time <= *rep.bounds.t_total});
      }
    }
  }

  rep.pass = std::all_of(rep.checks.begin(), rep.checks.end(),
                         [](const CheckResult& c) { return c.pass; });
  rep.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

std::string report_json(const RunReport& r) {
  json j;
  j["scenario"] = r.scenario;
  j["law"] = r.law;
  j["gains"] = {
      {"alpha", vec(r.fxts.alpha)},
      {"beta", vec(r.fxts.beta)},
      {"p", r.fxts.p},
      {"q", r.fxts.q},
      {"rho", r.fxts.rho},
      {"eta_bar", r.fxts.eta_bar},
      {"boundary_layer", r.fxts.boundary_layer},
      {"switching", r.fxts.switching == SwitchingForm::kElementwise ? "elementwise" : "norm"},
      {"high_order", r.fxts.high_order == HighOrderTerm::kGrowing ? "growing" : "decaying"},
      {"norm_epsilon", r.fxts.norm_epsilon},
  };
  j["convex_gains"] = {
      {"gamma1", r.convex.gamma1},
      {"gamma2", r.convex.gamma2},
      {"r1", r.convex.r1},
      {"r2", r.convex.r2},
      {"epsilon", r.convex.epsilon},
      {"mu", r.convex.mu},
      {"high_order", r.convex.high_order == HighOrderTerm::kGrowing ? "growing" : "decaying"},
  };
  j["bounds"] = {{"T_c", opt(r.bounds.t_c)}, {"T_o", opt(r.bounds.t_o)},
                 {"T_total", opt(r.bounds.t_total)}};
  j["measured"] = {{"reach_time", opt(r.reach_time)},
                   {"kkt_time", opt(r.kkt_time)},
                   {"oracle_time", opt(r.oracle_time)}};
  j["terminal"] = {{"feasibility_inf", r.terminal_feasibility},
                   {"stationarity", r.terminal_stationarity},
                   {"objective", r.terminal_objective}};
  j["oracle"] = json::array();
  for (const auto& c : r.oracle) {
    j["oracle"].push_back({{"quantity", c.quantity},
                           {"reference", c.reference},
                           {"measured", c.measured},
                           {"abs_error", c.abs_error}});
  }
  j["checks"] = json::object();
  for (const auto& c : r.checks) j["checks"][c.name] = c.pass;
  j["pass"] = r.pass;
  return json_text(j);
}

RunResult run_to_directory(const ScenarioSetup& setup, const std::filesystem::path& out) {
  ensure_dir(out);
  RunResult res = execute_run(setup);
  auto trace = open_output(out / "trace.csv");
  write_trajectory_csv(res.trajectory, trace);
  open_output(out / "report.json") << report_json(res.report);
  return res;
}

SweepOutcome execute_sweep(const ScenarioSetup& setup) {
  const ScenarioInstance& inst = setup.instance;
  const SweepConfig& sc = setup.config.sweep;
  Eigen::VectorXd center = Eigen::VectorXd::Zero(inst.problem.n());
  if (sc.center) {
    if (sc.center->size() != inst.problem.n()) throw ConfigError("[sweep] center has wrong length");
    center = *sc.center;
  }
  const InitialStateSampler sampler =
      as_config_error([&] { return shell_sampler(center, sc.radius_min, sc.radius_max); });
  if (sc.count < 1) throw ConfigError("[sweep] count must be at least 1");

  SweepOutcome out;
  out.result = sweep_initial_conditions(inst.problem, inst.law, sampler, setup.config.seed,
                                        sc.count, inst.fxts, inst.convex,
                                        setup.disturbance_ptr(), setup.config.integration);
  out.bound = theoretical_bounds(setup).t_c;
  out.pass = out.result.unreached == 0 &&
             (!out.bound || time_or_inf(out.result.max_reach_time) <= *out.bound);
  return out;
}

SweepOutcome sweep_to_directory(const ScenarioSetup& setup, const std::filesystem::path& out) {
  ensure_dir(out);
  SweepOutcome res = execute_sweep(setup);
  const Eigen::Index n = setup.instance.problem.n();

  auto csv = open_output(out / "sweep.csv");
  csv << "index";
  for (Eigen::Index i = 1; i <= n; ++i) csv << ",x0_" << i;
  csv << ",radius,reach_time,kkt_time,error\n";
  csv << std::scientific << std::setprecision(14);
  const Eigen::VectorXd center =
      setup.config.sweep.center.value_or(Eigen::VectorXd::Zero(n));
  for (std::size_t k = 0; k < res.result.rows.size(); ++k) {
    const SweepRow& row = res.result.rows[k];
    csv << k;
    for (Eigen::Index i = 0; i < n; ++i) csv << ',' << row.x0(i);
    csv << ',' << (row.x0 - center).norm() << ',';
    if (row.reach_time) csv << *row.reach_time;
    csv << ',';
    if (row.kkt_time) csv << *row.kkt_time;
    csv << ',';
    if (row.error) {
      std::string msg = *row.error;
      std::replace(msg.begin(), msg.end(), '"', '\'');
      csv << '"' << msg << '"';
    }
    csv << '\n';
  }

  json j;
  j["scenario"] = setup.config.scenario;
  j["law"] = std::string(law_name(setup.instance.law.kind));
  j["count"] = res.result.rows.size();
  j["seed"] = setup.config.seed;
  j["radius_min"] = setup.config.sweep.radius_min;
  j["radius_max"] = setup.config.sweep.radius_max;
  j["max_reach_time"] = opt(res.result.max_reach_time);
  j["unreached"] = res.result.unreached;
  j["bound_T_c"] = opt(res.bound);
  j["pass"] = res.pass;
  open_output(out / "sweep_summary.json") << json_text(j);
  return res;
}

CompareOutcome execute_compare(const ScenarioSetup& setup) {
  const ScenarioInstance& inst = setup.instance;
  if (inst.law.kind == LawKind::kProjectedGradientBaseline) {
    throw ConfigError("compare needs a fixed-time law as the primary law");
  }
  const FlowLaw baseline = as_config_error([&] { return baseline_pgf(setup.config.baseline_mu); });
  CompareOutcome out;
  out.fxts = simulate(inst.problem, inst.law, inst.x0, inst.fxts, inst.convex,
                      setup.disturbance_ptr(), setup.config.integration);
  out.baseline = simulate(inst.problem, baseline, inst.x0, inst.fxts, inst.convex,
                          setup.disturbance_ptr(), setup.config.integration);
  out.pass = out.fxts.kkt_time && *out.fxts.kkt_time <= time_or_inf(out.baseline.kkt_time);
  return out;
}

CompareOutcome compare_to_directory(const ScenarioSetup& setup, const std::filesystem::path& out) {
  ensure_dir(out);
  CompareOutcome res = execute_compare(setup);
  auto csv = open_output(out / "compare.csv");
  csv << "t,feas_fxts,stat_fxts,obj_fxts,feas_pgf,stat_pgf,obj_pgf\n";
  csv << std::scientific << std::setprecision(14);
  for (std::size_t k = 0; k < res.fxts.size(); ++k) {
    csv << res.fxts.times[k] << ',' << res.fxts.feasibility[k] << ',' << res.fxts.stationarity[k]
        << ',' << res.fxts.objective[k] << ',' << res.baseline.feasibility[k] << ','
        << res.baseline.stationarity[k] << ',' << res.baseline.objective[k] << '\n';
  }
  const auto terminal = [&](const Trajectory& tr) {
    return inf_norm(setup.instance.problem.constraints(tr.states.back()));
  };
  json j;
  j["scenario"] = setup.config.scenario;
  j["law"] = std::string(law_name(setup.instance.law.kind));
  j["baseline_mu"] = setup.config.baseline_mu;
  j["fxts"] = {{"reach_time", opt(res.fxts.reach_time)},
               {"kkt_time", opt(res.fxts.kkt_time)},
               {"terminal_feasibility_inf", terminal(res.fxts)},
               {"terminal_objective", res.fxts.objective.back()}};
  j["baseline"] = {{"reach_time", opt(res.baseline.reach_time)},
                   {"kkt_time", opt(res.baseline.kkt_time)},
                   {"terminal_feasibility_inf", terminal(res.baseline)},
                   {"terminal_objective", res.baseline.objective.back()}};
  j["pass"] = res.pass;
  open_output(out / "compare_summary.json") << json_text(j);
  return res;
}

AuditOutcome execute_audit(const ScenarioSetup& setup, int count, double fd_step) {
  if (count < 1) throw ConfigError("audit count must be at least 1");
  const ScenarioInstance& inst = setup.instance;
  std::seed_seq seq{static_cast<std::uint32_t>(setup.config.seed),
                    static_cast<std::uint32_t>(setup.config.seed >> 32), 7u};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);

  AuditOutcome out;
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd x = inst.x0;
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += 0.5 * normal(rng);
    const DerivativeAudit a = finite_difference_audit(inst.problem, x, fd_step);
    out.max_error = std::max({out.max_error, a.grad_err, a.jac_err});
    out.rows.push_back({std::move(x), a});
  }
  out.pass = out.max_error <= 1e-4;
  return out;
}

AuditOutcome audit_to_directory(const ScenarioSetup& setup, int count, const std::filesystem::path& out) {
  ensure_dir(out);
  AuditOutcome res = execute_audit(setup, count);
  auto csv = open_output(out / "audit.csv");
  const Eigen::Index n = setup.instance.problem.n();
  csv << "index";
  for (Eigen::Index i = 1; i <= n; ++i) csv << ",x_" << i;
  csv << ",grad_err,jac_err\n";
  csv << std::scientific << std::setprecision(14);
  for (std::size_t k = 0; k < res.rows.size(); ++k) {
    csv << k;
    for (Eigen::Index i = 0; i < n; ++i) csv << ',' << res.rows[k].x(i);
    csv << ',' << res.rows[k].audit.grad_err << ',' << res.rows[k].audit.jac_err << '\n';
  }
  return res;
}

}  // namespace fxts
