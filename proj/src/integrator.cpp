#include "fxts/integrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <thread>

#include "fxts/errors.hpp"

namespace fxts {

namespace {

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

void check_stage(const Eigen::VectorXd& k, double t, const Eigen::VectorXd& x) {
  if (!all_finite(k)) throw NumericalBlowup("non-finite state derivative", t, x);
}

// RK4 update given the first stage, which simulate() already evaluated.
Eigen::VectorXd rk4_from_first_stage(const StateDerivative& rhs, const Eigen::VectorXd& x,
                                     double t, double h, const Eigen::VectorXd& k1) {
  check_stage(k1, t, x);
  const Eigen::VectorXd k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1);
  check_stage(k2, t, x);
  const Eigen::VectorXd k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2);
  check_stage(k3, t, x);
  const Eigen::VectorXd k4 = rhs(t + h, x + h * k3);
  check_stage(k4, t, x);
  Eigen::VectorXd next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!all_finite(next)) throw NumericalBlowup("non-finite state after step", t, x);
  return next;
}

void validate_law_gains(const ProblemSpec& problem, const FlowLaw& law, const FxtsGains& fxts,
                        const ConvexFlowGains& convex, const DisturbanceSpec* disturbance) {
  switch (law.kind) {
    case LawKind::kNonconvexFxts:
      validate(fxts, problem.m());
      break;
    case LawKind::kRobustFxts: {
      validate(fxts, problem.m());
      const double declared = std::max(fxts.eta_bar, disturbance ? disturbance->bound : 0.0);
      if (problem.m() > 0 && fxts.alpha_min() <= declared) {
        throw GainConditionViolated("robust law requires min(alpha) > eta_bar");
      }
      break;
    }
    case LawKind::kConvexFxts:
      validate(fxts, problem.m());
      validate(convex);
      break;
    case LawKind::kProjectedGradientBaseline:
      if (!(law.mu_pgf > 0.0)) throw ConfigError("baseline gain mu_pgf must be positive");
      break;
  }
}

}  // namespace

void IntegrationConfig::validate() const {
  if (!(step > 0.0)) throw InvalidInput("integration step must be positive");
  if (!(t_end > step)) throw InvalidInput("t_end must exceed the step");
  if (record_stride < 1) throw InvalidInput("record_stride must be at least 1");
  if (!(reach_tol > 0.0) || !(kkt_tol > 0.0)) throw InvalidInput("tolerances must be positive");
  if (sustain_steps < 1) throw InvalidInput("sustain window must be at least one step");
}

Eigen::VectorXd step_rk4(const StateDerivative& rhs, const Eigen::VectorXd& x, double t,
                         double step) {
  if (!(step > 0.0)) throw InvalidInput("RK4 step must be positive");
  return rk4_from_first_stage(rhs, x, t, step, rhs(t, x));
}

Trajectory simulate(const ProblemSpec& problem, const FlowLaw& law, const Eigen::VectorXd& x0,
                    const FxtsGains& fxts, const ConvexFlowGains& convex,
                    const DisturbanceSpec* disturbance, const IntegrationConfig& config) {
  config.validate();
  if (x0.size() != problem.n()) throw InvalidInput("initial state has wrong length");
  validate_law_gains(problem, law, fxts, convex, disturbance);

  const auto steps = static_cast<long>(std::llround(config.t_end / config.step));
  const StateDerivative rhs = [&](double t, const Eigen::VectorXd& x) {
    return evaluate_flow(problem, law, x, t, fxts, convex, disturbance).xdot;
  };

  Trajectory traj;
  std::vector<double> all_times;
  std::vector<double> feas_inf;
  std::vector<double> kkt_ratio;
  all_times.reserve(steps + 1);
  feas_inf.reserve(steps + 1);
  kkt_ratio.reserve(steps + 1);

  Eigen::VectorXd x = x0;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * config.step;
    FlowEvaluation ev = evaluate_flow(problem, law, x, t, fxts, convex, disturbance);
    const LocalGeometry& geo = ev.geometry;
    const double hinf = geo.constraints.size() ? geo.constraints.cwiseAbs().maxCoeff() : 0.0;
    const double stat = geo.project(geo.gradient).norm();

    all_times.push_back(t);
    feas_inf.push_back(hinf);
    kkt_ratio.push_back(std::max(hinf / config.reach_tol, stat / config.kkt_tol));

    if (k % config.record_stride == 0 || k == steps) {
      traj.times.push_back(t);
      traj.states.push_back(x);
      traj.feasibility.push_back(geo.constraints.norm());
      traj.stationarity.push_back(stat);
      traj.objective.push_back(problem.objective(x));
      traj.multipliers.push_back(ev.multiplier);
    }
    if (k == steps) break;
    x = rk4_from_first_stage(rhs, x, t, config.step, ev.xdot);
  }

  const double window = config.sustain_window();
  traj.reach_time = first_sustained_time(all_times, feas_inf, config.reach_tol, window);
  traj.kkt_time = first_sustained_time(all_times, kkt_ratio, 1.0, window);
  return traj;
}

std::optional<double> first_sustained_time(std::span<const double> times,
                                           std::span<const double> values, double tol,
                                           double window) {
  if (times.size() != values.size()) throw InvalidInput("times and values differ in length");
  if (times.empty()) throw InvalidInput("empty series");
  const std::size_t n = times.size();
  const double slack = 1e-9 * std::max(window, 1e-12);

  // next_bad[k]: first index >= k with value above tol (n if none).
  std::vector<std::size_t> next_bad(n + 1, n);
  for (std::size_t k = n; k-- > 0;) next_bad[k] = values[k] > tol ? k : next_bad[k + 1];

  for (std::size_t k = 0; k < n; ++k) {
    const double end = times[k] + window;
    if (times[n - 1] < end - slack) return std::nullopt;  // window no longer fits
    const std::size_t bad = next_bad[k];
    if (bad == n || times[bad] > end + slack) return times[k];
  }
  return std::nullopt;
}

std::optional<double> detect_reach_time(const Trajectory& traj, double tol, double window) {
  return first_sustained_time(traj.times, traj.feasibility, tol, window);
}

InitialStateSampler shell_sampler(Eigen::VectorXd center, double r_min, double r_max) {
  if (!(r_min > 0.0) || r_max < r_min) throw InvalidInput("need 0 < r_min <= r_max");
  return [center = std::move(center), r_min, r_max](std::mt19937_64& rng, int index, int count) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd dir(center.size());
    do {
      for (Eigen::Index i = 0; i < dir.size(); ++i) dir(i) = normal(rng);
    } while (dir.norm() == 0.0);
    const double frac = count > 1 ? static_cast<double>(index) / (count - 1) : 0.0;
    const double radius = r_min * std::pow(r_max / r_min, frac);
    return Eigen::VectorXd(center + radius * dir.normalized());
  };
}

SweepResult sweep_initial_conditions(const ProblemSpec& problem, const FlowLaw& law,
                                     const InitialStateSampler& sampler, std::uint64_t seed,
                                     int count, const FxtsGains& fxts,
                                     const ConvexFlowGains& convex,
                                     const DisturbanceSpec* disturbance,
                                     const IntegrationConfig& config, int threads) {
  if (count < 1) throw InvalidInput("sweep count must be at least 1");
  SweepResult result;
  result.rows.resize(count);

  auto run_row = [&](int i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);
    SweepRow& row = result.rows[i];
    row.x0 = sampler(rng, i, count);
    try {
      const Trajectory traj = simulate(problem, law, row.x0, fxts, convex, disturbance, config);
      row.reach_time = traj.reach_time;
      row.kkt_time = traj.kkt_time;
    } catch (const Error& e) {
      row.error = e.what();
    }
  };

  if (threads <= 1) {
    for (int i = 0; i < count; ++i) run_row(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < count; i = next++) run_row(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  for (const SweepRow& row : result.rows) {
    if (row.reach_time) {
      result.max_reach_time = std::max(result.max_reach_time.value_or(*row.reach_time),
                                       *row.reach_time);
    } else {
      ++result.unreached;
    }
  }
  return result;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  const Eigen::Index n = traj.empty() ? 0 : traj.states.front().size();
  const Eigen::Index m = traj.empty() ? 0 : traj.multipliers.front().size();
  out << "t";
  for (Eigen::Index i = 1; i <= n; ++i) out << ",x_" << i;
  out << ",feas,stat,obj";
  for (Eigen::Index i = 1; i <= m; ++i) out << ",lam_" << i;
  out << '\n';

  const auto flags = out.flags();
  const auto prec = out.precision();
  out << std::scientific << std::setprecision(14);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << traj.times[k];
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << traj.states[k](i);
    out << ',' << traj.feasibility[k] << ',' << traj.stationarity[k] << ',' << traj.objective[k];
    for (Eigen::Index i = 0; i < m; ++i) out << ',' << traj.multipliers[k](i);
    out << '\n';
  }
  out.flags(flags);
  out.precision(prec);
}

}  // namespace fxts
