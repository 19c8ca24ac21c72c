// Command-line front end: run, sweep, compare and audit configured scenarios.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "fxts/config.hpp"
#include "fxts/errors.hpp"
#include "fxts/harness.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> count;
  std::optional<double> step;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("config_path", o.config, "scenario config file");
  cmd->add_option("--config", o.config, "scenario config file");
  cmd->add_option("--out", o.out, "output directory (overrides [output] dir)");
  cmd->add_option("--seed", o.seed, "random seed (overrides [scenario] seed)");
  cmd->add_option("--count", o.count, "number of samples for sweep or audit");
  cmd->add_option("--step", o.step, "integration step (overrides [integration] step)")
      ->check(CLI::PositiveNumber);
}

fxts::ScenarioSetup prepare(const Options& o, std::filesystem::path& out_dir) {
  if (o.config.empty()) throw fxts::ConfigError("a config file is required (--config <path>)");
  fxts::RunConfig cfg = fxts::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.step) cfg.integration.step = *o.step;
  if (o.count) cfg.sweep.count = *o.count;
  out_dir = o.out ? std::filesystem::path(*o.out) : cfg.output_dir;
  return fxts::build_setup(cfg);
}

void print_time(const char* label, const std::optional<double>& t) {
  std::cout << label;
  if (t) {
    std::cout << *t;
  } else {
    std::cout << "none";
  }
  std::cout << '\n';
}

int do_run(const Options& o) {
  std::filesystem::path out;
  const fxts::ScenarioSetup setup = prepare(o, out);
  const fxts::RunResult res = fxts::run_to_directory(setup, out);
  const fxts::RunReport& r = res.report;
  std::cout << "scenario " << r.scenario << " law " << r.law << '\n';
  print_time("bound T_c      ", r.bounds.t_c);
  if (r.bounds.t_total) print_time("bound T_total  ", r.bounds.t_total);
  print_time("reach_time     ", r.reach_time);
  print_time("kkt_time       ", r.kkt_time);
  if (r.oracle_time) print_time("oracle_time    ", r.oracle_time);
  std::cout << "terminal feas  " << r.terminal_feasibility << '\n'
            << "terminal stat  " << r.terminal_stationarity << '\n'
            << "terminal obj   " << r.terminal_objective << '\n';
  for (const auto& c : r.oracle) {
    std::cout << "oracle " << c.quantity << " ref " << c.reference << " got " << c.measured
              << " err " << c.abs_error << '\n';
  }
  for (const auto& c : r.checks) std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << '\n';
  std::cout << "runtime_s      " << r.runtime_seconds << '\n'
            << (r.pass ? "PASS" : "FAIL") << " (" << (out / "report.json").string() << ")\n";
  return r.pass ? kExitPass : kExitFail;
}

int do_sweep(const Options& o) {
  std::filesystem::path out;
  const fxts::ScenarioSetup setup = prepare(o, out);
  const fxts::SweepOutcome res = fxts::sweep_to_directory(setup, out);
  std::cout << "samples " << res.result.rows.size() << " unreached " << res.result.unreached
            << '\n';
  print_time("max reach_time ", res.result.max_reach_time);
  print_time("bound T_c      ", res.bound);
  std::cout << (res.pass ? "PASS" : "FAIL") << " (" << (out / "sweep.csv").string() << ")\n";
  return res.pass ? kExitPass : kExitFail;
}

int do_compare(const Options& o) {
  std::filesystem::path out;
  const fxts::ScenarioSetup setup = prepare(o, out);
  const fxts::CompareOutcome res = fxts::compare_to_directory(setup, out);
  print_time("fxts kkt_time     ", res.fxts.kkt_time);
  print_time("baseline kkt_time ", res.baseline.kkt_time);
  std::cout << "fxts terminal feas     " << res.fxts.feasibility.back() << '\n'
            << "baseline terminal feas " << res.baseline.feasibility.back() << '\n'
            << (res.pass ? "PASS" : "FAIL") << " (" << (out / "compare.csv").string() << ")\n";
  return res.pass ? kExitPass : kExitFail;
}

int do_audit(const Options& o) {
  std::filesystem::path out;
  const fxts::ScenarioSetup setup = prepare(o, out);
  const fxts::AuditOutcome res = fxts::audit_to_directory(setup, o.count.value_or(20), out);
  std::cout << "states " << res.rows.size() << " max relative error " << res.max_error << '\n'
            << (res.pass ? "PASS" : "FAIL") << " (" << (out / "audit.csv").string() << ")\n";
  return res.pass ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fixed-time convergent constrained optimization flows"};
  app.require_subcommand(1);
  Options opts;
  CLI::App* run = app.add_subcommand("run", "simulate one scenario and write trace + report");
  CLI::App* sweep = app.add_subcommand("sweep", "reach times over seeded initial states");
  CLI::App* compare = app.add_subcommand("compare", "fixed-time law against the baseline flow");
  CLI::App* audit = app.add_subcommand("audit", "finite-difference derivative audit");
  for (CLI::App* cmd : {run, sweep, compare, audit}) add_common(cmd, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  std::cout.precision(10);
  try {
    if (run->parsed()) return do_run(opts);
    if (sweep->parsed()) return do_sweep(opts);
    if (compare->parsed()) return do_compare(opts);
    return do_audit(opts);
  } catch (const fxts::NumericalBlowup& e) {
    std::cerr << "numerical error: " << e.what() << " at t = " << e.time()
              << "\nlast finite state: " << e.state().transpose() << '\n';
    return kExitNumerical;
  } catch (const fxts::SingularEvaluation& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const fxts::OracleFailure& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const fxts::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
