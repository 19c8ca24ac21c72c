#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fxts/controllers.hpp"
#include "fxts/integrator.hpp"
#include "fxts/scenarios.hpp"

namespace fxts {

/// Values given in [gains]; unset fields keep the scenario defaults. A
/// single-entry alpha/beta is broadcast to every constraint.
struct FxtsGainOverrides {
  std::optional<Eigen::VectorXd> alpha, beta;
  std::optional<double> p, q, rho, eta_bar, boundary_layer, norm_epsilon;
  std::optional<SwitchingForm> switching;
  std::optional<HighOrderTerm> high_order;
};

struct ConvexGainOverrides {
  std::optional<double> gamma1, gamma2, r1, r2, epsilon, mu;
  std::optional<HighOrderTerm> high_order;
};

/// Matched sinusoid eta_i(t) = amplitude * sin(frequency * t) on every constraint.
struct DisturbanceConfig {
  double amplitude = 0.0;
  double frequency = 5.0;
  std::optional<double> bound;  // defaults to amplitude * sqrt(m)
};

struct EstimationConfig {
  int nodes = 5;
  Eigen::VectorXd truth = Eigen::Vector2d(2.0, -1.0);
  double noise_variance = 0.01;
  bool noise = true;
  std::optional<std::vector<std::pair<int, int>>> edges;  // default: path graph
};

struct QuadraticConfig {
  double mu = 1.0;
  Eigen::VectorXd center = Eigen::Vector2d(1.0, -1.0);
  Eigen::VectorXd normal = Eigen::Vector2d(1.0, 2.0);
};

struct ReportTolerances {
  std::optional<double> stationarity;  // terminal ||P grad phi||
  std::optional<double> oracle;        // terminal distance to the oracle
};

struct SweepConfig {
  int count = 100;
  double radius_min = 1e-2;
  double radius_max = 1e2;
  std::optional<Eigen::VectorXd> center;
};

struct RunConfig {
  std::string scenario = "sphere";
  std::optional<LawKind> law;
  std::optional<Eigen::VectorXd> x0;
  std::uint64_t seed = 1;

  FxtsGainOverrides gains;
  ConvexGainOverrides convex;
  ConvexBoundForm bound_form = ConvexBoundForm::kStatement;
  IntegrationConfig integration;
  std::optional<DisturbanceConfig> disturbance;
  double baseline_mu = 5.0;

  AcopfData acopf = AcopfData::defaults();
  EstimationConfig estimation;
  QuadraticConfig quadratic;
  SweepConfig sweep;
  ReportTolerances tolerances;
  std::filesystem::path output_dir = ".";
};

/// Parses the sectioned key = value format. Unknown sections or keys, and
/// malformed values, raise ConfigError.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace fxts
