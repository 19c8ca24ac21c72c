#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "fxts/problem.hpp"

namespace fxts {

/// Shape of the switching vector w(h) that the multiplier inverts through G^+.
enum class SwitchingForm {
  kElementwise,      // alpha o sgn(h) o |h|^p + beta o sgn(h) o |h|^q
  kNormRegularized,  // alpha o h / (||h|| + eps)^(1-p) + beta-term, see HighOrderTerm
};

/// Magnitude law of the second (high-order) term in the norm-regularized
/// switching vector and in the F1 descent direction.
///   kGrowing:  v * (||v|| + eps)^(r - 1)   -> magnitude ~ ||v||^r
///   kDecaying: v / (||v|| + eps)^(1 + r)   -> magnitude ~ ||v||^-r
/// Only kGrowing yields the fixed-time settling bounds reported below; kDecaying
/// is kept for comparison and is singular at critical points.
enum class HighOrderTerm { kGrowing, kDecaying };

struct FxtsGains {
  Eigen::VectorXd alpha;  // length m, > 0
  Eigen::VectorXd beta;   // length m, > 0
  double p = 0.5;         // (0, 1)
  double q = 1.5;         // > 1
  double rho = 0.0;       // robust switching gain
  double eta_bar = 0.0;   // declared disturbance bound
  double boundary_layer = 1e-4;
  SwitchingForm switching = SwitchingForm::kElementwise;
  HighOrderTerm high_order = HighOrderTerm::kGrowing;
  double norm_epsilon = 1e-6;  // regularization of the norm-form switching

  static FxtsGains uniform(int m, double alpha, double beta, double p, double q);

  double alpha_min() const { return alpha.minCoeff(); }
  double beta_min() const { return beta.minCoeff(); }
};

/// Throws InvalidInput when gains violate their ranges or do not have length m.
void validate(const FxtsGains& gains, int m);

struct ConvexFlowGains {
  double gamma1 = 2.0;
  double gamma2 = 2.0;
  double r1 = 0.5;  // (0, 1)
  double r2 = 1.5;  // > 1
  double epsilon = 1e-6;
  double mu = 1.0;  // strong-convexity modulus, bound reporting only
  HighOrderTerm high_order = HighOrderTerm::kGrowing;
};

void validate(const ConvexFlowGains& gains);

/// Matched disturbance eta(t, x) entering as J_h^T eta.
struct DisturbanceSpec {
  std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> eta;
  double bound = 0.0;
};

enum class LawKind {
  kNonconvexFxts,
  kRobustFxts,
  kConvexFxts,
  kProjectedGradientBaseline,
};

/// Controller selector. mu_pgf is only read by the baseline.
struct FlowLaw {
  LawKind kind = LawKind::kNonconvexFxts;
  double mu_pgf = 5.0;
};

LawKind parse_law(std::string_view name);
std::string_view law_name(LawKind kind);

/// Elementwise sgn(v_i) |v_i|^e with sgn(0) = 0.
Eigen::VectorXd signed_power(const Eigen::VectorXd& v, double e);

/// Switching vector w(h) for the configured form (before applying G^+).
Eigen::VectorXd switching_vector(const Eigen::VectorXd& h, const FxtsGains& gains);

Eigen::VectorXd lambda_eq(const ProblemSpec& problem, const Eigen::VectorXd& x);
Eigen::VectorXd lambda_sw(const ProblemSpec& problem, const Eigen::VectorXd& x,
                          const FxtsGains& gains);
Eigen::VectorXd lambda_fxts(const ProblemSpec& problem, const Eigen::VectorXd& x,
                            const FxtsGains& gains);

/// G^+ rho sgn_bl(h), sgn_bl being the exact sign when boundary_layer == 0 and
/// h_i / (|h_i| + boundary_layer) otherwise.
Eigen::VectorXd robust_switch(const ProblemSpec& problem, const Eigen::VectorXd& x,
                              const FxtsGains& gains);

/// Fixed-time descent direction built from the gradient. Throws
/// SingularEvaluation when epsilon == 0 and the gradient vanishes.
Eigen::VectorXd f1_direction(const Eigen::VectorXd& gradient, const ConvexFlowGains& gains);
Eigen::VectorXd f1_direction(const ProblemSpec& problem, const Eigen::VectorXd& x,
                             const ConvexFlowGains& gains);

Eigen::VectorXd capital_lambda_fxts(const ProblemSpec& problem, const Eigen::VectorXd& x,
                                    const FxtsGains& fxts, const ConvexFlowGains& convex);

/// State derivative together with the multiplier that produced it and the
/// geometry it was evaluated with.
struct FlowEvaluation {
  Eigen::VectorXd xdot;
  Eigen::VectorXd multiplier;
  LocalGeometry geometry;
};

FlowEvaluation evaluate_flow(const ProblemSpec& problem, const FlowLaw& law,
                             const Eigen::VectorXd& x, double t, const FxtsGains& fxts,
                             const ConvexFlowGains& convex,
                             const DisturbanceSpec* disturbance = nullptr);

Eigen::VectorXd closed_loop_rhs(const ProblemSpec& problem, const FlowLaw& law,
                                const Eigen::VectorXd& x, double t, const FxtsGains& fxts,
                                const ConvexFlowGains& convex,
                                const DisturbanceSpec* disturbance = nullptr);

/// Reaching-time bound 2/(alpha_min (1-p)) + 2/(beta_min (q-1)).
double settling_bound_nonconvex(const FxtsGains& gains);

/// Same bound with alpha_min replaced by alpha_min - eta_bar. Throws
/// GainConditionViolated when alpha_min <= eta_bar.
double settling_bound_robust(const FxtsGains& gains);

/// Exponent convention of the optimality-phase bound T_o.
///   kStatement: (2 mu)^((1 + r)/2)
///   kProof:     (2 mu)^(r/2)
enum class ConvexBoundForm { kStatement, kProof };

struct ConvexSettlingBound {
  double t_c = 0.0;
  double t_o = 0.0;
  double t_total = 0.0;
};

ConvexSettlingBound settling_bound_convex(const FxtsGains& fxts, const ConvexFlowGains& convex,
                                          ConvexBoundForm form = ConvexBoundForm::kStatement);

}  // namespace fxts
