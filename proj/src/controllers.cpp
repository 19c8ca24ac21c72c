#include "fxts/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fxts/errors.hpp"

namespace fxts {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// v scaled to magnitude law of `term` with exponent r.
Eigen::VectorXd high_order_term(const Eigen::VectorXd& v, double norm, double r, double eps,
                                HighOrderTerm term) {
  if (term == HighOrderTerm::kGrowing) return v * std::pow(norm + eps, r - 1.0);
  return v / std::pow(norm + eps, 1.0 + r);
}

Eigen::VectorXd sw_from_geometry(const LocalGeometry& geo, const FxtsGains& gains) {
  return geo.gram_pinv * switching_vector(geo.constraints, gains);
}

Eigen::VectorXd eq_from_geometry(const LocalGeometry& geo) {
  return -geo.gram_pinv * (geo.jacobian * geo.gradient);
}

Eigen::VectorXd robust_from_geometry(const LocalGeometry& geo, const FxtsGains& gains) {
  if (gains.rho == 0.0) return Eigen::VectorXd::Zero(geo.constraints.size());
  Eigen::VectorXd s(geo.constraints.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double h = geo.constraints(i);
    s(i) = gains.boundary_layer > 0.0 ? h / (std::abs(h) + gains.boundary_layer) : sign(h);
  }
  return geo.gram_pinv * (gains.rho * s);
}

Eigen::VectorXd capital_from_geometry(const LocalGeometry& geo, const Eigen::VectorXd& f1,
                                      const FxtsGains& gains) {
  return geo.gram_pinv * (-(geo.jacobian * f1) + switching_vector(geo.constraints, gains));
}

}  // namespace

FxtsGains FxtsGains::uniform(int m, double alpha, double beta, double p, double q) {
  FxtsGains g;
  g.alpha = Eigen::VectorXd::Constant(m, alpha);
  g.beta = Eigen::VectorXd::Constant(m, beta);
  g.p = p;
  g.q = q;
  return g;
}

void validate(const FxtsGains& gains, int m) {
  if (gains.alpha.size() != m || gains.beta.size() != m) {
    throw InvalidInput("alpha and beta must have one entry per constraint (m = " +
                       std::to_string(m) + ")");
  }
  if (m > 0 && (gains.alpha.minCoeff() <= 0.0 || gains.beta.minCoeff() <= 0.0)) {
    throw InvalidInput("alpha and beta entries must be positive");
  }
  if (!(gains.p > 0.0 && gains.p < 1.0)) throw InvalidInput("p must lie in (0, 1)");
  if (!(gains.q > 1.0)) throw InvalidInput("q must exceed 1");
  if (gains.rho < 0.0) throw InvalidInput("rho must be non-negative");
  if (gains.eta_bar < 0.0) throw InvalidInput("eta_bar must be non-negative");
  if (gains.boundary_layer < 0.0) throw InvalidInput("boundary_layer must be non-negative");
  if (gains.norm_epsilon < 0.0) throw InvalidInput("norm_epsilon must be non-negative");
}

void validate(const ConvexFlowGains& gains) {
  if (!(gains.gamma1 > 0.0 && gains.gamma2 > 0.0)) throw InvalidInput("gammas must be positive");
  if (!(gains.r1 > 0.0 && gains.r1 < 1.0)) throw InvalidInput("r1 must lie in (0, 1)");
  if (!(gains.r2 > 1.0)) throw InvalidInput("r2 must exceed 1");
  if (gains.epsilon < 0.0) throw InvalidInput("epsilon must be non-negative");
  if (!(gains.mu > 0.0)) throw InvalidInput("mu must be positive");
}

LawKind parse_law(std::string_view name) {
  if (name == "nonconvex-fxts") return LawKind::kNonconvexFxts;
  if (name == "robust-fxts") return LawKind::kRobustFxts;
  if (name == "convex-fxts") return LawKind::kConvexFxts;
  if (name == "projected-gradient-baseline" || name == "pgf") {
    return LawKind::kProjectedGradientBaseline;
  }
  throw ConfigError("unknown law selector '" + std::string(name) + "'");
}

std::string_view law_name(LawKind kind) {
  switch (kind) {
    case LawKind::kNonconvexFxts:
      return "nonconvex-fxts";
    case LawKind::kRobustFxts:
      return "robust-fxts";
    case LawKind::kConvexFxts:
      return "convex-fxts";
    case LawKind::kProjectedGradientBaseline:
      return "projected-gradient-baseline";
  }
  return "unknown";
}

Eigen::VectorXd signed_power(const Eigen::VectorXd& v, double e) {
  if (!(e > 0.0)) throw InvalidInput("signed_power exponent must be positive");
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = sign(v(i)) * std::pow(std::abs(v(i)), e);
  return out;
}

Eigen::VectorXd switching_vector(const Eigen::VectorXd& h, const FxtsGains& gains) {
  if (gains.switching == SwitchingForm::kElementwise) {
    return gains.alpha.cwiseProduct(signed_power(h, gains.p)) +
           gains.beta.cwiseProduct(signed_power(h, gains.q));
  }
  const double norm = h.norm();
  const double eps = gains.norm_epsilon;
  if (norm == 0.0) return Eigen::VectorXd::Zero(h.size());
  const Eigen::VectorXd low = h / std::pow(norm + eps, 1.0 - gains.p);
  const Eigen::VectorXd high = high_order_term(h, norm, gains.q, eps, gains.high_order);
  return gains.alpha.cwiseProduct(low) + gains.beta.cwiseProduct(high);
}

Eigen::VectorXd lambda_eq(const ProblemSpec& problem, const Eigen::VectorXd& x) {
  return eq_from_geometry(local_geometry(problem, x));
}

Eigen::VectorXd lambda_sw(const ProblemSpec& problem, const Eigen::VectorXd& x,
                          const FxtsGains& gains) {
  validate(gains, problem.m());
  return sw_from_geometry(local_geometry(problem, x), gains);
}

Eigen::VectorXd lambda_fxts(const ProblemSpec& problem, const Eigen::VectorXd& x,
                            const FxtsGains& gains) {
  validate(gains, problem.m());
  const LocalGeometry geo = local_geometry(problem, x);
  return eq_from_geometry(geo) + sw_from_geometry(geo, gains);
}

Eigen::VectorXd robust_switch(const ProblemSpec& problem, const Eigen::VectorXd& x,
                              const FxtsGains& gains) {
  if (gains.rho < 0.0) throw InvalidInput("rho must be non-negative");
  return robust_from_geometry(local_geometry(problem, x), gains);
}

Eigen::VectorXd f1_direction(const Eigen::VectorXd& gradient, const ConvexFlowGains& gains) {
  const double norm = gradient.norm();
  if (gains.epsilon == 0.0 && norm == 0.0) {
    throw SingularEvaluation("F1 is undefined at a critical point without regularization");
  }
  if (norm == 0.0) return Eigen::VectorXd::Zero(gradient.size());
  const double eps = gains.epsilon;
  return gains.gamma1 * gradient / std::pow(norm + eps, 1.0 - gains.r1) +
         gains.gamma2 * high_order_term(gradient, norm, gains.r2, eps, gains.high_order);
}

Eigen::VectorXd f1_direction(const ProblemSpec& problem, const Eigen::VectorXd& x,
                             const ConvexFlowGains& gains) {
  validate(gains);
  return f1_direction(problem.gradient(x), gains);
}

Eigen::VectorXd capital_lambda_fxts(const ProblemSpec& problem, const Eigen::VectorXd& x,
                                    const FxtsGains& fxts, const ConvexFlowGains& convex) {
  validate(fxts, problem.m());
  validate(convex);
  const LocalGeometry geo = local_geometry(problem, x);
  return capital_from_geometry(geo, f1_direction(geo.gradient, convex), fxts);
}

FlowEvaluation evaluate_flow(const ProblemSpec& problem, const FlowLaw& law,
                             const Eigen::VectorXd& x, double t, const FxtsGains& fxts,
                             const ConvexFlowGains& convex, const DisturbanceSpec* disturbance) {
  FlowEvaluation out;
  out.geometry = local_geometry(problem, x);
  const LocalGeometry& geo = out.geometry;
  const Eigen::MatrixXd jt = geo.jacobian.transpose();

  switch (law.kind) {
    case LawKind::kNonconvexFxts:
      out.multiplier = eq_from_geometry(geo) + sw_from_geometry(geo, fxts);
      out.xdot = -geo.gradient - jt * out.multiplier;
      break;
    case LawKind::kRobustFxts: {
      const double declared = std::max(fxts.eta_bar, disturbance ? disturbance->bound : 0.0);
      if (problem.m() > 0 && fxts.alpha_min() <= declared) {
        throw GainConditionViolated("robust law requires min(alpha) > eta_bar");
      }
      out.multiplier =
          eq_from_geometry(geo) + sw_from_geometry(geo, fxts) + robust_from_geometry(geo, fxts);
      out.xdot = -geo.gradient - jt * out.multiplier;
      break;
    }
    case LawKind::kConvexFxts: {
      const Eigen::VectorXd f1 = f1_direction(geo.gradient, convex);
      out.multiplier = capital_from_geometry(geo, f1, fxts);
      out.xdot = -f1 - jt * out.multiplier;
      break;
    }
    case LawKind::kProjectedGradientBaseline: {
      if (!(law.mu_pgf > 0.0)) throw ConfigError("baseline gain mu_pgf must be positive");
      // -mu P grad - J^T G^+ h, written as -mu grad - J^T (multiplier).
      out.multiplier =
          law.mu_pgf * eq_from_geometry(geo) + geo.gram_pinv * geo.constraints;
      out.xdot = -law.mu_pgf * geo.gradient - jt * out.multiplier;
      break;
    }
    default:
      throw ConfigError("unknown law selector");
  }

  if (disturbance && disturbance->eta) {
    const Eigen::VectorXd eta = disturbance->eta(t, x);
    if (eta.size() != problem.m()) throw InvalidInput("disturbance must have length m");
    if (eta.norm() > disturbance->bound * (1.0 + 1e-9) + 1e-15) {
      throw InvalidInput("disturbance sample exceeds its declared bound");
    }
    out.xdot += jt * eta;
  }
  return out;
}

Eigen::VectorXd closed_loop_rhs(const ProblemSpec& problem, const FlowLaw& law,
                                const Eigen::VectorXd& x, double t, const FxtsGains& fxts,
                                const ConvexFlowGains& convex, const DisturbanceSpec* disturbance) {
  return evaluate_flow(problem, law, x, t, fxts, convex, disturbance).xdot;
}

double settling_bound_nonconvex(const FxtsGains& gains) {
  validate(gains, static_cast<int>(gains.alpha.size()));
  return 2.0 / (gains.alpha_min() * (1.0 - gains.p)) + 2.0 / (gains.beta_min() * (gains.q - 1.0));
}

double settling_bound_robust(const FxtsGains& gains) {
  validate(gains, static_cast<int>(gains.alpha.size()));
  const double margin = gains.alpha_min() - gains.eta_bar;
  if (margin <= 0.0) throw GainConditionViolated("robust bound requires min(alpha) > eta_bar");
  return 2.0 / (margin * (1.0 - gains.p)) + 2.0 / (gains.beta_min() * (gains.q - 1.0));
}

ConvexSettlingBound settling_bound_convex(const FxtsGains& fxts, const ConvexFlowGains& convex,
                                          ConvexBoundForm form) {
  validate(convex);
  ConvexSettlingBound b;
  b.t_c = settling_bound_nonconvex(fxts);
  const double two_mu = 2.0 * convex.mu;
  const double e1 = form == ConvexBoundForm::kStatement ? (1.0 + convex.r1) / 2.0 : convex.r1 / 2.0;
  const double e2 = form == ConvexBoundForm::kStatement ? (1.0 + convex.r2) / 2.0 : convex.r2 / 2.0;
  b.t_o = 2.0 / (convex.gamma1 * std::pow(two_mu, e1) * (1.0 - convex.r1)) +
          2.0 / (convex.gamma2 * std::pow(two_mu, e2) * (convex.r2 - 1.0));
  b.t_total = b.t_c + b.t_o;
  return b;
}

}  // namespace fxts
