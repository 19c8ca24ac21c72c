#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fxts/controllers.hpp"
#include "fxts/errors.hpp"
#include "fxts/scenarios.hpp"
#include "test_support.hpp"

using namespace fxts;
using fxts::testing::vec2;

namespace {

Eigen::VectorXd one(double v) { return Eigen::VectorXd::Constant(1, v); }

FxtsGains sphere_gains() { return FxtsGains::uniform(1, 5.0, 5.0, 0.5, 1.5); }

ConvexFlowGains convex_gains(double g1, double g2, double r1, double r2, double eps,
                             HighOrderTerm form) {
  ConvexFlowGains c;
  c.gamma1 = g1;
  c.gamma2 = g2;
  c.r1 = r1;
  c.r2 = r2;
  c.epsilon = eps;
  c.high_order = form;
  return c;
}

}  // namespace

TEST(SignedPower, Examples) {
  EXPECT_TRUE(signed_power(vec2(0, 0), 0.7).isZero(0.0));
  const Eigen::VectorXd r = signed_power(vec2(4, -9), 0.5);
  EXPECT_NEAR(r(0), 2.0, 1e-15);
  EXPECT_NEAR(r(1), -3.0, 1e-15);
  EXPECT_NEAR(signed_power(one(3.0), 1.5)(0), 3.0 * std::sqrt(3.0), 1e-14);
  EXPECT_NEAR(signed_power(one(3.0), 1.5)(0), 5.196152, 1e-6);
}

TEST(SignedPower, RejectsNonPositiveExponent) {
  EXPECT_THROW(signed_power(one(2.0), 0.0), InvalidInput);
  EXPECT_THROW(signed_power(one(2.0), -1.0), InvalidInput);
}

TEST(LambdaEq, Examples) {
  EXPECT_NEAR(lambda_eq(fxts::testing::radial_sphere(), vec2(0.6, 0.8))(0), -0.5, 1e-15);
  EXPECT_TRUE(lambda_eq(fxts::testing::linear_problem(), vec2(0, 0)).isZero(0.0));
  EXPECT_NEAR(lambda_eq(fxts::testing::linear_problem(), vec2(1, 1))(0), -1.0, 1e-15);
}

TEST(LambdaSw, Examples) {
  const ProblemSpec s = fxts::testing::radial_sphere();
  EXPECT_TRUE(lambda_sw(s, vec2(0.6, 0.8), sphere_gains()).isZero(1e-15));

  // h = 3, G = 16.
  const double oracle = (5.0 * std::sqrt(3.0) + 5.0 * std::pow(3.0, 1.5)) / 16.0;
  EXPECT_NEAR(lambda_sw(s, vec2(2, 0), sphere_gains())(0), oracle, 1e-14);
  EXPECT_NEAR(oracle, 2.165063, 1e-6);

  const ProblemSpec scalar = fxts::testing::scalar_offset(1.0);  // h(0) = -1, G = 1
  EXPECT_NEAR(lambda_sw(scalar, one(0.0), FxtsGains::uniform(1, 1, 1, 0.5, 2.0))(0), -2.0, 1e-15);
}

TEST(LambdaSw, NormRegularizedForm) {
  FxtsGains g = FxtsGains::uniform(2, 3.0, 2.0, 0.5, 1.5);
  g.switching = SwitchingForm::kNormRegularized;
  g.norm_epsilon = 1e-6;
  const Eigen::Vector2d h(0.3, -0.4);  // ||h|| = 0.5
  const double n = 0.5 + 1e-6;
  const Eigen::Vector2d oracle = 3.0 * h / std::pow(n, 0.5) + 2.0 * h * std::pow(n, 0.5);
  EXPECT_LE((switching_vector(h, g) - oracle).norm(), 1e-14);

  g.high_order = HighOrderTerm::kDecaying;
  const Eigen::Vector2d decaying = 3.0 * h / std::pow(n, 0.5) + 2.0 * h / std::pow(n, 2.5);
  EXPECT_LE((switching_vector(h, g) - decaying).norm(), 1e-13);
  EXPECT_TRUE(switching_vector(Eigen::Vector2d::Zero(), g).isZero(0.0));
}

TEST(LambdaFxts, Examples) {
  const ProblemSpec s = fxts::testing::radial_sphere();
  const double oracle = (-8.0 + 5.0 * std::sqrt(3.0) + 5.0 * std::pow(3.0, 1.5)) / 16.0;
  EXPECT_NEAR(lambda_fxts(s, vec2(2, 0), sphere_gains())(0), oracle, 1e-14);
  EXPECT_NEAR(oracle, 1.665063, 1e-6);

  EXPECT_TRUE(lambda_fxts(fxts::testing::linear_problem(), vec2(0, 0), sphere_gains()).isZero(0.0));

  const Eigen::VectorXd on = vec2(0.6, 0.8);
  EXPECT_NEAR(lambda_fxts(s, on, sphere_gains())(0), lambda_eq(s, on)(0), 1e-15);
}

TEST(LambdaFxts, RejectsInvalidGains) {
  const ProblemSpec s = fxts::testing::radial_sphere();
  EXPECT_THROW(lambda_fxts(s, vec2(2, 0), FxtsGains::uniform(1, 5, 5, 1.0, 1.5)), InvalidInput);
  EXPECT_THROW(lambda_fxts(s, vec2(2, 0), FxtsGains::uniform(1, 5, 5, 0.5, 1.0)), InvalidInput);
  EXPECT_THROW(lambda_fxts(s, vec2(2, 0), FxtsGains::uniform(1, 0, 5, 0.5, 1.5)), InvalidInput);
  EXPECT_THROW(lambda_fxts(s, vec2(2, 0), FxtsGains::uniform(2, 5, 5, 0.5, 1.5)), InvalidInput);
}

TEST(RobustSwitch, Examples) {
  const ProblemSpec s = fxts::testing::radial_sphere();
  FxtsGains g = sphere_gains();
  EXPECT_TRUE(robust_switch(s, vec2(1.2, 0), g).isZero(0.0));  // rho = 0

  g.rho = 0.3;
  g.boundary_layer = 0.0;
  const Eigen::VectorXd x = vec2(std::sqrt(1.001), 0.0);  // h = 1e-3
  EXPECT_NEAR(robust_switch(s, x, g)(0), 0.3 / (4.0 * 1.001), 1e-15);
  EXPECT_NEAR(robust_switch(s, x, g)(0), 0.075, 1e-4);

  EXPECT_EQ(robust_switch(s, vec2(0.6, 0.8), g)(0), 0.0);

  g.boundary_layer = 1e-4;
  EXPECT_NEAR(robust_switch(s, x, g)(0), 0.3 / (4.0 * 1.001) * (1e-3 / 1.1e-3), 1e-12);
}

TEST(F1Direction, Examples) {
  ConvexFlowGains reg = convex_gains(2, 2, 0.5, 1.5, 1e-6, HighOrderTerm::kGrowing);
  EXPECT_TRUE(f1_direction(Eigen::Vector2d::Zero().eval(), reg).isZero(0.0));

  for (HighOrderTerm form : {HighOrderTerm::kGrowing, HighOrderTerm::kDecaying}) {
    const Eigen::VectorXd d = f1_direction(vec2(1, 0), convex_gains(2, 2, 0.5, 1.5, 0.0, form));
    EXPECT_NEAR(d(0), 4.0, 1e-15);
    EXPECT_EQ(d(1), 0.0);
  }

  const double scale = std::pow(5.0, -0.5) + std::pow(5.0, -3.0);
  const Eigen::VectorXd decaying =
      f1_direction(vec2(3, 4), convex_gains(1, 1, 0.5, 2.0, 0.0, HighOrderTerm::kDecaying));
  EXPECT_LE((decaying - scale * vec2(3, 4)).norm(), 1e-14);
  EXPECT_NEAR(scale, 0.455213, 1e-6);

  const Eigen::VectorXd growing =
      f1_direction(vec2(3, 4), convex_gains(1, 1, 0.5, 2.0, 0.0, HighOrderTerm::kGrowing));
  EXPECT_LE((growing - (std::pow(5.0, -0.5) + 5.0) * vec2(3, 4)).norm(), 1e-13);
}

TEST(F1Direction, UnregularizedCriticalPointThrows) {
  EXPECT_THROW(f1_direction(Eigen::Vector2d::Zero().eval(),
                            convex_gains(2, 2, 0.5, 1.5, 0.0, HighOrderTerm::kGrowing)),
               SingularEvaluation);
}

TEST(CapitalLambda, Examples) {
  const ProblemSpec s = fxts::testing::radial_sphere();
  const ConvexFlowGains c = convex_gains(2, 2, 0.5, 1.5, 0.0, HighOrderTerm::kDecaying);
  const double f1 = 2.0 * 2.0 / std::pow(2.0, 0.5) + 2.0 * 2.0 / std::pow(2.0, 2.5);
  EXPECT_NEAR(f1, 3.535534, 1e-6);
  const double oracle = (-2.0 * 2.0 * f1 + 5.0 * std::sqrt(3.0) + 5.0 * std::pow(3.0, 1.5)) / 16.0;
  EXPECT_NEAR(capital_lambda_fxts(s, vec2(2, 0), sphere_gains(), c)(0), oracle, 1e-14);
  EXPECT_NEAR(oracle, 1.281180, 1e-6);

  // On the manifold only the equivalent part remains: -G^+ J F1.
  const Eigen::VectorXd on = vec2(0.6, 0.8);
  const Eigen::VectorXd f1_on = f1_direction(s, on, c);
  const double pure = -(s.jacobian(on) * f1_on)(0) / 4.0;
  EXPECT_NEAR(capital_lambda_fxts(s, on, sphere_gains(), c)(0), pure, 1e-14);

  const ConvexFlowGains reg = convex_gains(2, 2, 0.5, 1.5, 1e-6, HighOrderTerm::kGrowing);
  EXPECT_TRUE(capital_lambda_fxts(fxts::testing::linear_problem(), vec2(0, 0),
                                  sphere_gains(), reg)
                  .isZero(0.0));
}

TEST(ClosedLoop, EquilibriumForEveryLaw) {
  const ProblemSpec l = fxts::testing::linear_problem();
  FxtsGains g = sphere_gains();
  g.rho = 0.3;
  const ConvexFlowGains c;
  for (LawKind k : {LawKind::kNonconvexFxts, LawKind::kRobustFxts, LawKind::kConvexFxts,
                    LawKind::kProjectedGradientBaseline}) {
    EXPECT_TRUE(closed_loop_rhs(l, FlowLaw{k}, vec2(0, 0), 0.0, g, c).isZero(0.0))
        << law_name(k);
  }
}

TEST(ClosedLoop, RadialObjectiveIsStillOnCircle) {
  const Eigen::VectorXd xdot = closed_loop_rhs(fxts::testing::radial_sphere(), FlowLaw{},
                                               vec2(0.6, 0.8), 0.0, sphere_gains(), {});
  EXPECT_LE(xdot.norm(), 1e-15);
}

TEST(ClosedLoop, RobustLawDecreasesViolationOutsideBoundaryLayer) {
  const ProblemSpec s = build_sphere().problem;
  FxtsGains g = sphere_gains();
  g.rho = 0.3;
  g.eta_bar = 0.05;
  const DisturbanceSpec d{[](double t, const Eigen::VectorXd&) -> Eigen::VectorXd {
                            return Eigen::VectorXd::Constant(1, 0.05 * std::sin(5.0 * t));
                          },
                          0.05};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> radius(0.95, 1.05);
  std::uniform_real_distribution<double> time(0.0, 3.0);
  for (int k = 0; k < 500; ++k) {
    const Eigen::VectorXd x = radius(rng) * fxts::testing::random_on_circle(rng);
    const double h = s.constraints(x)(0);
    if (std::abs(h) <= g.boundary_layer) continue;
    ASSERT_GT(g.rho, 4.0 * x.squaredNorm() * g.eta_bar);
    const Eigen::VectorXd xdot = closed_loop_rhs(s, FlowLaw{LawKind::kRobustFxts}, x, time(rng), g, {}, &d);
    EXPECT_LE(h * (s.jacobian(x) * xdot)(0), 0.0);
  }
}

TEST(ClosedLoop, RobustGainConditionEnforced) {
  const ProblemSpec s = build_sphere().problem;
  FxtsGains g = FxtsGains::uniform(1, 1.0, 5.0, 0.5, 1.5);
  g.eta_bar = 1.0;
  EXPECT_THROW(closed_loop_rhs(s, FlowLaw{LawKind::kRobustFxts}, vec2(2, 0), 0.0, g, {}),
               GainConditionViolated);
}

TEST(ClosedLoop, DisturbanceAboveDeclaredBoundRejected) {
  const ProblemSpec s = build_sphere().problem;
  const DisturbanceSpec d{[](double, const Eigen::VectorXd&) -> Eigen::VectorXd {
                            return Eigen::VectorXd::Constant(1, 0.2);
                          },
                          0.1};
  EXPECT_THROW(closed_loop_rhs(s, FlowLaw{}, vec2(2, 0), 0.0, sphere_gains(), {}, &d), InvalidInput);
}

TEST(ParseLaw, NamesRoundTrip) {
  for (LawKind k : {LawKind::kNonconvexFxts, LawKind::kRobustFxts, LawKind::kConvexFxts,
                    LawKind::kProjectedGradientBaseline}) {
    EXPECT_EQ(parse_law(law_name(k)), k);
  }
  EXPECT_EQ(parse_law("pgf"), LawKind::kProjectedGradientBaseline);
  EXPECT_THROW(parse_law("gradient"), ConfigError);
}

TEST(SettlingBounds, NonconvexExamples) {
  EXPECT_NEAR(settling_bound_nonconvex(sphere_gains()), 1.6, 1e-12);
  EXPECT_NEAR(settling_bound_nonconvex(FxtsGains::uniform(4, 4.0, 4.0, 0.5, 2.0)), 1.5, 1e-12);
  FxtsGains g;
  g.alpha = vec2(2, 8);
  g.beta = vec2(4, 4);
  g.p = 0.5;
  g.q = 3.0;
  EXPECT_NEAR(settling_bound_nonconvex(g), 2.25, 1e-12);
}

TEST(SettlingBounds, RobustExamples) {
  FxtsGains g = sphere_gains();
  EXPECT_EQ(settling_bound_robust(g), settling_bound_nonconvex(g));
  g.eta_bar = 0.05;
  EXPECT_NEAR(settling_bound_robust(g), 2.0 / (4.95 * 0.5) + 0.8, 1e-12);
  EXPECT_NEAR(settling_bound_robust(g), 1.608081, 1e-6);
  FxtsGains bad = FxtsGains::uniform(1, 1.0, 1.0, 0.5, 1.5);
  bad.eta_bar = 1.0;
  EXPECT_THROW(settling_bound_robust(bad), GainConditionViolated);
}

TEST(SettlingBounds, ConvexExamples) {
  ConvexFlowGains c;
  c.mu = 0.5;
  EXPECT_NEAR(settling_bound_convex(sphere_gains(), c).t_o, 4.0, 1e-12);
  EXPECT_NEAR(settling_bound_convex(sphere_gains(), c, ConvexBoundForm::kProof).t_o, 4.0, 1e-12);

  c.mu = 1.0;
  const double t_o = 2.0 / (2.0 * 0.5 * std::pow(2.0, 0.75)) + 2.0 / (2.0 * 0.5 * std::pow(2.0, 1.25));
  const ConvexSettlingBound b = settling_bound_convex(sphere_gains(), c);
  EXPECT_NEAR(b.t_o, t_o, 1e-12);
  EXPECT_NEAR(b.t_c, 1.6, 1e-12);
  EXPECT_NEAR(b.t_total, 1.6 + t_o, 1e-12);
  EXPECT_NEAR(b.t_total, 3.630103530, 1e-9);

  const double proof = 2.0 / std::pow(2.0, 0.25) + 2.0 / std::pow(2.0, 0.75);
  EXPECT_NEAR(settling_bound_convex(sphere_gains(), c, ConvexBoundForm::kProof).t_o, proof, 1e-12);
}

// ---------------------------------------------------------------------------
// Properties.

TEST(ControllerProperties, SlidingRateIdentity) {
  std::mt19937_64 rng(21);
  const ProblemSpec sphere = build_sphere().problem;
  const ScenarioInstance acopf = build_acopf3();
  for (int k = 0; k < 200; ++k) {
    const Eigen::VectorXd xs = fxts::testing::random_vector(rng, 2, 2.0);
    const FxtsGains gs = sphere_gains();
    const Eigen::VectorXd hs = sphere.constraints(xs);
    const Eigen::VectorXd rate =
        sphere.jacobian(xs) * closed_loop_rhs(sphere, FlowLaw{}, xs, 0.0, gs, {});
    const Eigen::VectorXd target =
        -(gs.alpha.cwiseProduct(signed_power(hs, gs.p)) + gs.beta.cwiseProduct(signed_power(hs, gs.q)));
    EXPECT_LE((rate - target).norm(), 1e-9 * std::max(1.0, target.norm()));

    const Eigen::VectorXd xa = acopf.x0 + fxts::testing::random_vector(rng, 6, 0.2);
    const Eigen::VectorXd ha = acopf.problem.constraints(xa);
    const Eigen::VectorXd ratea =
        acopf.problem.jacobian(xa) * closed_loop_rhs(acopf.problem, FlowLaw{}, xa, 0.0, acopf.fxts, {});
    const Eigen::VectorXd targeta = -(acopf.fxts.alpha.cwiseProduct(signed_power(ha, 0.5)) +
                                      acopf.fxts.beta.cwiseProduct(signed_power(ha, 2.0)));
    EXPECT_LE((ratea - targeta).norm(), 1e-9 * std::max(1.0, targeta.norm()));
  }
}

TEST(ControllerProperties, TangencyAndReducedFlowOnManifold) {
  std::mt19937_64 rng(22);
  const ProblemSpec sphere = build_sphere().problem;
  for (int k = 0; k < 200; ++k) {
    const Eigen::VectorXd x = fxts::testing::random_on_circle(rng);
    const Eigen::VectorXd xdot = closed_loop_rhs(sphere, FlowLaw{}, x, 0.0, sphere_gains(), {});
    EXPECT_LE((sphere.jacobian(x) * xdot).norm(), 1e-9);
    const Eigen::VectorXd reduced = -projector(sphere, x) * sphere.gradient(x);
    EXPECT_LE((xdot - reduced).norm(), 1e-9);
    // Descent: grad^T P grad >= 0.
    EXPECT_GE(sphere.gradient(x).dot(-reduced), -1e-12);
  }
}

TEST(ControllerProperties, SwitchingIsOdd) {
  std::mt19937_64 rng(23);
  for (SwitchingForm form : {SwitchingForm::kElementwise, SwitchingForm::kNormRegularized}) {
    FxtsGains g = FxtsGains::uniform(3, 2.0, 3.0, 0.4, 1.7);
    g.alpha(1) = 5.0;
    g.switching = form;
    for (int k = 0; k < 100; ++k) {
      const Eigen::VectorXd h = fxts::testing::random_vector(rng, 3);
      EXPECT_LE((switching_vector(-h, g) + switching_vector(h, g)).norm(), 1e-14);
    }
  }
}

TEST(ControllerProperties, BoundMonotonicity) {
  const double base = settling_bound_nonconvex(sphere_gains());
  FxtsGains g = sphere_gains();
  g.alpha(0) = 6.0;
  EXPECT_LT(settling_bound_nonconvex(g), base);
  g = sphere_gains();
  g.beta(0) = 6.0;
  EXPECT_LT(settling_bound_nonconvex(g), base);

  double prev = 0.0;
  for (double p : {0.1, 0.5, 0.9, 0.99}) {
    g = sphere_gains();
    g.p = p;
    EXPECT_GT(settling_bound_nonconvex(g), prev);
    prev = settling_bound_nonconvex(g);
  }
  prev = 0.0;
  for (double q : {3.0, 2.0, 1.5, 1.01}) {
    g = sphere_gains();
    g.q = q;
    EXPECT_GT(settling_bound_nonconvex(g), prev);
    prev = settling_bound_nonconvex(g);
  }

  ConvexFlowGains c;
  prev = std::numeric_limits<double>::infinity();
  for (double mu : {0.1, 0.5, 1.0, 4.0, 100.0}) {
    c.mu = mu;
    const double t_o = settling_bound_convex(sphere_gains(), c).t_o;
    EXPECT_LT(t_o, prev);
    prev = t_o;
  }
}
