#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fxts/config.hpp"
#include "fxts/controllers.hpp"
#include "fxts/integrator.hpp"
#include "fxts/scenarios.hpp"

namespace fxts {

/// Everything needed to simulate one configured scenario.
struct ScenarioSetup {
  RunConfig config;
  ScenarioInstance instance;
  std::optional<DisturbanceSpec> disturbance;
  std::optional<EstimationNetwork> network;  // estimation only

  const DisturbanceSpec* disturbance_ptr() const {
    return disturbance ? &*disturbance : nullptr;
  }
};

/// Builds the scenario named in the config and applies every override.
/// Throws ConfigError on inconsistent dimensions.
ScenarioSetup build_setup(const RunConfig& config);

struct TheoreticalBounds {
  std::optional<double> t_c;
  std::optional<double> t_o;
  std::optional<double> t_total;
};

/// Recomputed from the gains of the active law; empty for the baseline.
TheoreticalBounds theoretical_bounds(const ScenarioSetup& setup);

/// Reference solution for scenarios that have one.
struct OracleReference {
  Eigen::VectorXd x;           // full reference state, or per-node parameter
  std::optional<double> objective;
};

std::optional<OracleReference> scenario_oracle(const ScenarioSetup& setup);

struct OracleComparison {
  std::string quantity;
  double reference = 0.0;
  double measured = 0.0;
  double abs_error = 0.0;
};

struct CheckResult {
  std::string name;
  bool pass = false;
};

struct RunReport {
  std::string scenario;
  std::string law;
  FxtsGains fxts;
  ConvexFlowGains convex;
  TheoreticalBounds bounds;
  std::optional<double> reach_time;
  std::optional<double> kkt_time;
  std::optional<double> oracle_time;  // estimation and convex-quadratic
  double terminal_feasibility = 0.0;  // ||h||_inf
  double terminal_stationarity = 0.0;
  double terminal_objective = 0.0;
  std::vector<OracleComparison> oracle;
  std::vector<CheckResult> checks;
  bool pass = false;
  double runtime_seconds = 0.0;
};

/// Largest distance from any node estimate (n = N * d state) to `target`.
double max_node_error(const Eigen::VectorXd& x, const Eigen::VectorXd& target);

struct RunResult {
  Trajectory trajectory;
  RunReport report;
};

/// Simulates and scores the setup without touching the filesystem.
RunResult execute_run(const ScenarioSetup& setup);

/// Report as JSON. Wall-clock runtime is left out so that repeated runs
/// produce identical files; it is printed by the CLI instead.
std::string report_json(const RunReport& report);

/// run: writes <out>/trace.csv and <out>/report.json.
RunResult run_to_directory(const ScenarioSetup& setup, const std::filesystem::path& out);

struct SweepOutcome {
  SweepResult result;
  std::optional<double> bound;
  bool pass = false;
};

/// Samples config.sweep.count initial states on log-spaced shells around
/// the sweep center (origin by default).
SweepOutcome execute_sweep(const ScenarioSetup& setup);

/// sweep: writes <out>/sweep.csv and <out>/sweep_summary.json.
SweepOutcome sweep_to_directory(const ScenarioSetup& setup, const std::filesystem::path& out);

struct CompareOutcome {
  Trajectory fxts;
  Trajectory baseline;
  bool pass = false;  // FxTS kkt_time no later than the baseline's
};

/// Runs the configured law and the projected-gradient baseline from the
/// same x0 with the same integration settings and disturbance.
CompareOutcome execute_compare(const ScenarioSetup& setup);

/// compare: writes <out>/compare.csv and <out>/compare_summary.json.
CompareOutcome compare_to_directory(const ScenarioSetup& setup, const std::filesystem::path& out);

struct AuditRow {
  Eigen::VectorXd x;
  DerivativeAudit audit;
};

struct AuditOutcome {
  std::vector<AuditRow> rows;
  double max_error = 0.0;
  bool pass = false;  // max_error <= 1e-4
};

/// Finite-difference audit at `count` states drawn around x0 from the seed.
AuditOutcome execute_audit(const ScenarioSetup& setup, int count, double fd_step = 1e-6);

/// audit: writes <out>/audit.csv.
AuditOutcome audit_to_directory(const ScenarioSetup& setup, int count, const std::filesystem::path& out);

}  // namespace fxts
