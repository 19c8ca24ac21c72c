#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fxts/controllers.hpp"
#include "fxts/problem.hpp"

namespace fxts {

struct IntegrationConfig {
  double step = 1e-4;
  double t_end = 1.0;
  int record_stride = 1;
  double reach_tol = 1e-3;  // on ||h||_inf
  double kkt_tol = 1e-3;    // on ||P grad phi||
  int sustain_steps = 50;   // tolerance must hold this many steps

  double sustain_window() const { return sustain_steps * step; }
  void validate() const;
};

/// Recorded run. All sequences have the same length; times strictly increase.
struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<double> feasibility;   // ||h||_2
  std::vector<double> stationarity;  // ||P grad phi||_2
  std::vector<double> objective;
  std::vector<Eigen::VectorXd> multipliers;
  std::optional<double> reach_time;
  std::optional<double> kkt_time;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
};

using StateDerivative = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

/// One classical Runge-Kutta step. Throws NumericalBlowup on non-finite stages.
Eigen::VectorXd step_rk4(const StateDerivative& rhs, const Eigen::VectorXd& x, double t,
                         double step);

Trajectory simulate(const ProblemSpec& problem, const FlowLaw& law, const Eigen::VectorXd& x0,
                    const FxtsGains& fxts, const ConvexFlowGains& convex,
                    const DisturbanceSpec* disturbance, const IntegrationConfig& config);

/// Earliest time t_k with values <= tol on every sample in [t_k, t_k + window].
/// The window must fit inside the series.
std::optional<double> first_sustained_time(std::span<const double> times,
                                           std::span<const double> values, double tol,
                                           double window);

std::optional<double> detect_reach_time(const Trajectory& traj, double tol, double window);

/// Seeded generator of initial states; `index` in [0, count).
using InitialStateSampler =
    std::function<Eigen::VectorXd(std::mt19937_64& rng, int index, int count)>;

/// Uniform directions around `center` at log-spaced radii in [r_min, r_max].
InitialStateSampler shell_sampler(Eigen::VectorXd center, double r_min, double r_max);

struct SweepRow {
  Eigen::VectorXd x0;
  std::optional<double> reach_time;
  std::optional<double> kkt_time;
  std::optional<std::string> error;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::optional<double> max_reach_time;  // over rows that reached
  int unreached = 0;                     // rows that errored or never reached
};

/// Runs simulate once per sample. Each sample draws from its own generator
/// seeded with (seed, index), so rows are independent of evaluation order.
SweepResult sweep_initial_conditions(const ProblemSpec& problem, const FlowLaw& law,
                                     const InitialStateSampler& sampler, std::uint64_t seed,
                                     int count, const FxtsGains& fxts,
                                     const ConvexFlowGains& convex,
                                     const DisturbanceSpec* disturbance,
                                     const IntegrationConfig& config, int threads = 1);

/// CSV: header t,x_1..x_n,feas,stat,obj,lam_1..lam_m; 15 significant digits.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

}  // namespace fxts
