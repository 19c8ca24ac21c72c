#include "fxts/problem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "fxts/errors.hpp"

namespace fxts {

namespace {

void require_size(Eigen::Index actual, Eigen::Index expected, const char* what) {
  if (actual != expected) {
    throw InvalidInput(std::string(what) + ": expected length " + std::to_string(expected) +
                       ", got " + std::to_string(actual));
  }
}

double relative_error(const Eigen::MatrixXd& approx, const Eigen::MatrixXd& exact) {
  if (exact.size() == 0) return 0.0;
  const double scale = std::max(1.0, exact.cwiseAbs().maxCoeff());
  return (approx - exact).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

ProblemSpec::ProblemSpec(int n, int m, ProblemFunctions functions)
    : n_(n), m_(m), fns_(std::move(functions)) {
  if (n_ < 1) throw InvalidInput("problem dimension n must be positive");
  if (m_ < 0 || m_ > n_) throw InvalidInput("constraint count must satisfy 0 <= m <= n");
  if (!fns_.objective || !fns_.gradient || !fns_.constraints || !fns_.jacobian) {
    throw InvalidInput("objective, gradient, constraints and jacobian are required");
  }
}

void ProblemSpec::check_state(const Eigen::VectorXd& x) const {
  require_size(x.size(), n_, "state");
}

double ProblemSpec::objective(const Eigen::VectorXd& x) const {
  check_state(x);
  return fns_.objective(x);
}

Eigen::VectorXd ProblemSpec::gradient(const Eigen::VectorXd& x) const {
  check_state(x);
  Eigen::VectorXd g = fns_.gradient(x);
  require_size(g.size(), n_, "gradient");
  return g;
}

Eigen::VectorXd ProblemSpec::constraints(const Eigen::VectorXd& x) const {
  check_state(x);
  Eigen::VectorXd h = fns_.constraints(x);
  require_size(h.size(), m_, "constraints");
  return h;
}

Eigen::MatrixXd ProblemSpec::jacobian(const Eigen::VectorXd& x) const {
  check_state(x);
  Eigen::MatrixXd j = fns_.jacobian(x);
  if (j.rows() != m_ || j.cols() != n_) throw InvalidInput("jacobian has wrong shape");
  return j;
}

Eigen::MatrixXd ProblemSpec::hessian(const Eigen::VectorXd& x) const {
  check_state(x);
  if (!fns_.hessian) throw InvalidInput("problem has no hessian");
  Eigen::MatrixXd hess = fns_.hessian(x);
  if (hess.rows() != n_ || hess.cols() != n_) throw InvalidInput("hessian has wrong shape");
  return hess;
}

Eigen::VectorXd LocalGeometry::project(const Eigen::VectorXd& v) const {
  return v - jacobian.transpose() * (gram_pinv * (jacobian * v));
}

LocalGeometry local_geometry(const ProblemSpec& problem, const Eigen::VectorXd& x,
                             double rank_tol) {
  LocalGeometry geo;
  geo.gradient = problem.gradient(x);
  geo.constraints = problem.constraints(x);
  geo.jacobian = problem.jacobian(x);
  geo.gram_pinv = symmetric_pinv(geo.jacobian * geo.jacobian.transpose(), rank_tol);
  return geo;
}

double eval_objective(const ProblemSpec& problem, const Eigen::VectorXd& x) {
  return problem.objective(x);
}

Eigen::MatrixXd gram(const ProblemSpec& problem, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd j = problem.jacobian(x);
  return j * j.transpose();
}

Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& g, double rank_tol) {
  if (!(rank_tol > 0.0)) throw InvalidInput("rank_tol must be positive");
  if (g.rows() != g.cols()) throw InvalidInput("pseudoinverse needs a square matrix");
  if (g.size() == 0) return g;

  // 1x1 is the sphere and scalar-constraint hot path.
  if (g.rows() == 1) {
    Eigen::MatrixXd out(1, 1);
    out(0, 0) = g(0, 0) > 0.0 ? 1.0 / g(0, 0) : 0.0;
    return out;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double largest = lambda.cwiseAbs().maxCoeff();
  if (largest == 0.0) return Eigen::MatrixXd::Zero(g.rows(), g.cols());

  const double cutoff = rank_tol * largest;
  Eigen::VectorXd inv(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    inv(i) = lambda(i) > cutoff ? 1.0 / lambda(i) : 0.0;
  }
  const Eigen::MatrixXd& v = eig.eigenvectors();
  return v * inv.asDiagonal() * v.transpose();
}

Eigen::MatrixXd pinv_gram(const ProblemSpec& problem, const Eigen::VectorXd& x, double rank_tol) {
  return symmetric_pinv(gram(problem, x), rank_tol);
}

Eigen::MatrixXd projector(const ProblemSpec& problem, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd j = problem.jacobian(x);
  const Eigen::MatrixXd gp = symmetric_pinv(j * j.transpose());
  return Eigen::MatrixXd::Identity(problem.n(), problem.n()) - j.transpose() * gp * j;
}

KktResidual kkt_residual(const ProblemSpec& problem, const Eigen::VectorXd& x) {
  const LocalGeometry geo = local_geometry(problem, x);
  KktResidual r;
  r.stationarity = geo.project(geo.gradient).norm();
  r.feasibility = geo.constraints.norm();
  r.multiplier_estimate = -geo.gram_pinv * (geo.jacobian * geo.gradient);
  return r;
}

DerivativeAudit finite_difference_audit(const ProblemSpec& problem, const Eigen::VectorXd& x,
                                        double step) {
  if (!(step > 0.0)) throw InvalidInput("finite-difference step must be positive");
  const int n = problem.n();
  Eigen::VectorXd fd_grad(n);
  Eigen::MatrixXd fd_jac(problem.m(), n);
  Eigen::VectorXd xp = x;
  Eigen::VectorXd xm = x;
  for (int k = 0; k < n; ++k) {
    xp(k) = x(k) + step;
    xm(k) = x(k) - step;
    fd_grad(k) = (problem.objective(xp) - problem.objective(xm)) / (2.0 * step);
    fd_jac.col(k) = (problem.constraints(xp) - problem.constraints(xm)) / (2.0 * step);
    xp(k) = x(k);
    xm(k) = x(k);
  }
  DerivativeAudit audit;
  audit.grad_err = relative_error(fd_grad, problem.gradient(x));
  audit.jac_err = relative_error(fd_jac, problem.jacobian(x));
  return audit;
}

std::optional<ReducedHessianReport> reduced_hessian_report(const ProblemSpec& problem,
                                                           const Eigen::VectorXd& x) {
  if (!problem.has_hessian()) return std::nullopt;
  const Eigen::MatrixXd hess = problem.hessian(x);
  const Eigen::MatrixXd j = problem.jacobian(x);

  Eigen::MatrixXd basis;
  if (j.rows() == 0) {
    basis = Eigen::MatrixXd::Identity(problem.n(), problem.n());
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(j, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double cutoff = kDefaultRankTol * std::max(1.0, sv.size() ? sv(0) : 0.0);
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv(rank) > cutoff) ++rank;
    basis = svd.matrixV().rightCols(problem.n() - rank);
  }

  ReducedHessianReport report;
  if (basis.cols() == 0) {
    // Zero-dimensional tangent space: the point is isolated by the constraints.
    report.min_eigenvalue = 0.0;
    report.positive_definite = true;
    return report;
  }
  const Eigen::MatrixXd reduced = basis.transpose() * hess * basis;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (reduced + reduced.transpose()));
  report.min_eigenvalue = eig.eigenvalues().minCoeff();
  report.positive_definite = report.min_eigenvalue > 0.0;
  return report;
}

}  // namespace fxts
