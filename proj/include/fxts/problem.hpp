#pragma once

#include <functional>
#include <optional>

#include <Eigen/Core>

namespace fxts {

/// Relative eigenvalue cutoff used wherever the Gram matrix is inverted.
inline constexpr double kDefaultRankTol = 1e-10;

using ScalarField = std::function<double(const Eigen::VectorXd&)>;
using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using MatrixField = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// User-supplied evaluators of an equality-constrained problem
///   min phi(x)  s.t.  h(x) = 0.
/// Derivatives are analytic; finite differences are only used to audit them.
struct ProblemFunctions {
  ScalarField objective;
  VectorField gradient;
  VectorField constraints;
  MatrixField jacobian;
  MatrixField hessian;  // optional, diagnostics only
};

/// Immutable problem description with dimension-checked evaluation.
/// Evaluators must be pure, so a ProblemSpec may be shared across threads.
class ProblemSpec {
 public:
  ProblemSpec(int n, int m, ProblemFunctions functions);

  int n() const { return n_; }
  int m() const { return m_; }
  bool has_hessian() const { return static_cast<bool>(fns_.hessian); }

  double objective(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  Eigen::VectorXd constraints(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const;

 private:
  void check_state(const Eigen::VectorXd& x) const;

  int n_;
  int m_;
  ProblemFunctions fns_;
};

/// First-order quantities at one state, evaluated once and shared by the
/// controllers and diagnostics.
struct LocalGeometry {
  Eigen::VectorXd gradient;     // n
  Eigen::VectorXd constraints;  // m
  Eigen::MatrixXd jacobian;     // m x n
  Eigen::MatrixXd gram_pinv;    // m x m

  /// P(x) v = v - J^T G^+ J v, without forming P.
  Eigen::VectorXd project(const Eigen::VectorXd& v) const;
};

LocalGeometry local_geometry(const ProblemSpec& problem, const Eigen::VectorXd& x,
                             double rank_tol = kDefaultRankTol);

struct KktResidual {
  double stationarity = 0.0;  // ||P(x) grad phi||
  double feasibility = 0.0;   // ||h(x)||
  Eigen::VectorXd multiplier_estimate;
};

double eval_objective(const ProblemSpec& problem, const Eigen::VectorXd& x);

/// G(x) = J_h(x) J_h(x)^T.
Eigen::MatrixXd gram(const ProblemSpec& problem, const Eigen::VectorXd& x);

/// Moore-Penrose pseudoinverse of a symmetric positive semidefinite matrix via
/// eigendecomposition. Eigenvalues below rank_tol * max eigenvalue are dropped.
Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& g, double rank_tol = kDefaultRankTol);

Eigen::MatrixXd pinv_gram(const ProblemSpec& problem, const Eigen::VectorXd& x,
                          double rank_tol = kDefaultRankTol);

/// Tangent projector P(x) = I - J^T G^+ J.
Eigen::MatrixXd projector(const ProblemSpec& problem, const Eigen::VectorXd& x);

KktResidual kkt_residual(const ProblemSpec& problem, const Eigen::VectorXd& x);

struct DerivativeAudit {
  double grad_err = 0.0;
  double jac_err = 0.0;
};

/// Max relative discrepancy between the supplied derivatives and central
/// differences. Entries are compared as |fd - analytic| / max(1, max|analytic|).
DerivativeAudit finite_difference_audit(const ProblemSpec& problem, const Eigen::VectorXd& x,
                                        double step);

/// Second-order report on the tangent space: eigenvalues of Z^T H Z where Z
/// spans ker J_h(x) and H is the objective Hessian.
struct ReducedHessianReport {
  double min_eigenvalue = 0.0;
  bool positive_definite = false;
};

std::optional<ReducedHessianReport> reduced_hessian_report(const ProblemSpec& problem,
                                                           const Eigen::VectorXd& x);

}  // namespace fxts
