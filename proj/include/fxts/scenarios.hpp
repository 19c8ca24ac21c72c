#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fxts/controllers.hpp"
#include "fxts/problem.hpp"

namespace fxts {

/// A ready-to-simulate problem with its default initial state, gains and law.
struct ScenarioInstance {
  ProblemSpec problem;
  Eigen::VectorXd x0;
  FxtsGains fxts;
  ConvexFlowGains convex;
  FlowLaw law;
};

/// Objective supplied by the caller of a scenario builder.
struct Objective {
  ScalarField value;
  VectorField gradient;
  MatrixField hessian;  // optional
};

// ---------------------------------------------------------------------------
// Unit-circle constraint h(x) = ||x||^2 - 1 in R^2.

/// phi(x) = x^T diag(1, -2) x + (0.5, 0.5)^T x
Objective sphere_default_objective();

/// Builds the circle problem. Without an objective the default quadratic is
/// used; without gains alpha = beta = 5, p = 0.5, q = 1.5. Default x0 = (2, 0).
ScenarioInstance build_sphere(std::optional<Objective> objective = std::nullopt,
                              std::optional<FxtsGains> gains = std::nullopt);

/// Brute-force minimization of an objective over the unit circle.
struct CircleGridMinimum {
  double angle = 0.0;
  Eigen::Vector2d x;
  double value = 0.0;
  std::vector<double> local_minima_angles;  // grid-local minima, ascending value
};

CircleGridMinimum circle_grid_minimum(const Objective& objective, int points = 1'000'000);

// ---------------------------------------------------------------------------
// Three-bus AC optimal power flow.

struct AcopfData {
  Eigen::Matrix3d susceptance;
  Eigen::Matrix3d conductance;
  Eigen::Vector3d active_demand;
  Eigen::Vector3d reactive_demand;
  double cost_a = 0.2;
  double cost_b = 1.0;
  // Slack bus is fixed at (V1, theta1) = (1, 0).

  static AcopfData defaults();
  void validate() const;
};

struct PowerInjections {
  Eigen::Vector3d active;
  Eigen::Vector3d reactive;
};

/// P_i = sum_j V_i V_j (G_ij cos th_ij + B_ij sin th_ij),
/// Q_i = sum_j V_i V_j (G_ij sin th_ij - B_ij cos th_ij).
PowerInjections power_injections(const Eigen::Vector3d& voltage, const Eigen::Vector3d& angle,
                                 const AcopfData& data);

/// State x = (theta2, theta3, V2, V3, Pg3, Qg3), cost a Pg3^2 + b Pg3, and
/// constraints (P2 + Pd2, Q2 + Qd2, P3 - Pg3, Q3 - Qg3). Default gains
/// alpha = beta = 4, p = 0.5, q = 2; default x0 = (0.4, -0.3, 0.9, 1.1, 0.5, 0.2).
ScenarioInstance build_acopf3(const AcopfData& data = AcopfData::defaults());

struct AcopfReference {
  Eigen::VectorXd x;
  double objective = 0.0;
  KktResidual residual;
  int iterations = 0;
};

/// Reference optimum obtained without integrating any flow: Pg3 is fixed at the
/// unconstrained minimizer of the cost, a damped minimum-norm Newton iteration
/// finds (theta2, theta3, V2, V3) meeting bus-2 balance and P3 = Pg3, and Qg3 is
/// read off row 4. The cost is bounded below by its unconstrained minimum, so
/// a feasible point attaining it is a global optimum; the KKT residual is then
/// checked to 1e-6. Throws OracleFailure after 200 iterations.
AcopfReference acopf_feasible_oracle(const AcopfData& data = AcopfData::defaults(),
                                     std::optional<Eigen::VectorXd> start = std::nullopt);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

// ---------------------------------------------------------------------------
// Consensus-constrained distributed estimation.

struct EstimationNetwork {
  int node_count = 0;
  int param_dim = 0;
  Eigen::MatrixXd laplacian;
  std::vector<Eigen::MatrixXd> sensing;    // H_i, m_i x param_dim
  std::vector<Eigen::MatrixXd> noise_cov;  // R_i
  std::vector<Eigen::VectorXd> measurements;
  Eigen::VectorXd truth;
  std::uint64_t rng_seed = 0;

  /// Throws InvalidNetwork on a non-symmetric, non-zero-row-sum or
  /// disconnected Laplacian, or on a non-positive-definite R_i.
  void validate() const;
};

/// Laplacian of the undirected graph with the given edges.
Eigen::MatrixXd laplacian_from_edges(int node_count,
                                     const std::vector<std::pair<int, int>>& edges);
Eigen::MatrixXd laplacian_path(int node_count);

struct EstimationOptions {
  int node_count = 5;
  Eigen::VectorXd truth = Eigen::Vector2d(2.0, -1.0);
  double noise_variance = 0.01;  // R_i = noise_variance * I, H_i = I
  bool add_noise = true;
  std::uint64_t seed = 1;
  std::optional<Eigen::MatrixXd> laplacian;  // default: path graph
};

/// Draws y_i = H_i theta* + v_i with v_i ~ N(0, R_i) from the seed.
EstimationNetwork make_estimation_network(const EstimationOptions& options = {});

/// Stacked problem over x = col(theta_1, ..., theta_N) with consensus
/// constraint (L kron I) x = 0. Uses the convex law with norm-regularized
/// switching; x0 is a seeded standard normal draw.
ScenarioInstance build_estimation(const EstimationNetwork& net,
                                  std::optional<FxtsGains> fxts = std::nullopt,
                                  std::optional<ConvexFlowGains> convex = std::nullopt);

/// theta_hat = (sum H_i^T R_i^-1 H_i)^-1 sum H_i^T R_i^-1 y_i.
Eigen::VectorXd centralized_ls_oracle(const EstimationNetwork& net);

// ---------------------------------------------------------------------------

/// phi(x) = mu/2 ||x - c||^2 subject to a^T (x - c) = 0; optimum x* = c.
ScenarioInstance build_convex_quadratic(double mu, const Eigen::VectorXd& center,
                                        const Eigen::VectorXd& normal);

/// Projected gradient flow with proportional restoration,
///   xdot = -mu_pgf P grad phi - J^T G^+ h.
FlowLaw baseline_pgf(double mu_pgf);

}  // namespace fxts
