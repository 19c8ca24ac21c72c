#include "fxts/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "fxts/errors.hpp"

namespace fxts {

// ---------------------------------------------------------------------------
// Circle

Objective sphere_default_objective() {
  const Eigen::Vector2d diag(1.0, -2.0);
  const Eigen::Vector2d lin(0.5, 0.5);
  Objective obj;
  obj.value = [=](const Eigen::VectorXd& x) {
    return x.dot(diag.cwiseProduct(x)) + lin.dot(x);
  };
  obj.gradient = [=](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return 2.0 * diag.cwiseProduct(x) + lin;
  };
  obj.hessian = [=](const Eigen::VectorXd&) -> Eigen::MatrixXd {
    return Eigen::MatrixXd(2.0 * diag.asDiagonal());
  };
  return obj;
}

ScenarioInstance build_sphere(std::optional<Objective> objective, std::optional<FxtsGains> gains) {
  Objective obj = objective ? std::move(*objective) : sphere_default_objective();
  if (!obj.value || !obj.gradient) throw InvalidInput("sphere objective needs value and gradient");

  ProblemFunctions fns;
  fns.objective = obj.value;
  fns.gradient = obj.gradient;
  fns.hessian = obj.hessian;
  fns.constraints = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return Eigen::VectorXd::Constant(1, x.squaredNorm() - 1.0);
  };
  fns.jacobian = [](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
    return 2.0 * x.transpose();
  };

  FxtsGains g = gains ? *gains : FxtsGains::uniform(1, 5.0, 5.0, 0.5, 1.5);
  validate(g, 1);
  return ScenarioInstance{ProblemSpec(2, 1, std::move(fns)), Eigen::Vector2d(2.0, 0.0), g,
                          ConvexFlowGains{}, FlowLaw{LawKind::kNonconvexFxts}};
}

CircleGridMinimum circle_grid_minimum(const Objective& objective, int points) {
  if (points < 3) throw InvalidInput("circle grid needs at least 3 points");
  std::vector<double> values(points);
  Eigen::VectorXd x(2);
  for (int k = 0; k < points; ++k) {
    const double a = 2.0 * std::numbers::pi * k / points;
    x << std::cos(a), std::sin(a);
    values[k] = objective.value(x);
  }

  std::vector<int> minima;
  for (int k = 0; k < points; ++k) {
    const double prev = values[(k + points - 1) % points];
    const double next = values[(k + 1) % points];
    if (values[k] <= prev && values[k] < next) minima.push_back(k);
  }
  std::sort(minima.begin(), minima.end(), [&](int a, int b) { return values[a] < values[b]; });
  if (minima.empty()) throw OracleFailure("objective is constant on the circle grid");

  CircleGridMinimum out;
  const int best = minima.front();
  out.angle = 2.0 * std::numbers::pi * best / points;
  out.x = Eigen::Vector2d(std::cos(out.angle), std::sin(out.angle));
  out.value = values[best];
  for (int k : minima) out.local_minima_angles.push_back(2.0 * std::numbers::pi * k / points);
  return out;
}

// ---------------------------------------------------------------------------
// AC-OPF

namespace {

struct FlowDerivatives {
  PowerInjections s;
  Eigen::Matrix3d dp_dtheta, dp_dv, dq_dtheta, dq_dv;
};

FlowDerivatives flow_derivatives(const Eigen::Vector3d& v, const Eigen::Vector3d& th,
                                 const AcopfData& d) {
  FlowDerivatives out;
  out.s.active.setZero();
  out.s.reactive.setZero();
  out.dp_dtheta.setZero();
  out.dp_dv.setZero();
  out.dq_dtheta.setZero();
  out.dq_dv.setZero();
  const Eigen::Matrix3d& g = d.conductance;
  const Eigen::Matrix3d& b = d.susceptance;

  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double c = std::cos(th(i) - th(j));
      const double s = std::sin(th(i) - th(j));
      const double re = g(i, j) * c + b(i, j) * s;  // P kernel
      const double im = g(i, j) * s - b(i, j) * c;  // Q kernel
      out.s.active(i) += v(i) * v(j) * re;
      out.s.reactive(i) += v(i) * v(j) * im;

      // d(re)/d(th_i) = -im, d(im)/d(th_i) = re; opposite sign for th_j.
      if (i != j) {
        out.dp_dtheta(i, i) -= v(i) * v(j) * im;
        out.dp_dtheta(i, j) += v(i) * v(j) * im;
        out.dq_dtheta(i, i) += v(i) * v(j) * re;
        out.dq_dtheta(i, j) -= v(i) * v(j) * re;
      }
      out.dp_dv(i, i) += v(j) * re;
      out.dp_dv(i, j) += v(i) * re;
      out.dq_dv(i, i) += v(j) * im;
      out.dq_dv(i, j) += v(i) * im;
    }
  }
  return out;
}

Eigen::Vector3d bus_angles(const Eigen::VectorXd& x) { return {0.0, x(0), x(1)}; }
Eigen::Vector3d bus_voltages(const Eigen::VectorXd& x) { return {1.0, x(2), x(3)}; }

// Columns (theta2, theta3, V2, V3) of bus `row`'s P or Q derivative.
Eigen::RowVector4d network_row(const Eigen::Matrix3d& d_theta, const Eigen::Matrix3d& d_v,
                               int bus) {
  return {d_theta(bus, 1), d_theta(bus, 2), d_v(bus, 1), d_v(bus, 2)};
}

}  // namespace

AcopfData AcopfData::defaults() {
  AcopfData d;
  d.susceptance << 0.0, -10.0, -5.0, -10.0, 0.0, -8.0, -5.0, -8.0, 0.0;
  d.conductance.setZero();
  d.active_demand << 0.0, 0.6, 0.4;
  d.reactive_demand << 0.0, 0.3, 0.2;
  d.cost_a = 0.2;
  d.cost_b = 1.0;
  return d;
}

void AcopfData::validate() const {
  if (!(cost_a > 0.0)) throw InvalidInput("cost_a must be positive");
  if ((susceptance - susceptance.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw InvalidInput("susceptance matrix must be symmetric");
  }
  if (!susceptance.allFinite() || !conductance.allFinite() || !active_demand.allFinite() ||
      !reactive_demand.allFinite()) {
    throw InvalidInput("network data must be finite");
  }
}

PowerInjections power_injections(const Eigen::Vector3d& voltage, const Eigen::Vector3d& angle,
                                 const AcopfData& data) {
  return flow_derivatives(voltage, angle, data).s;
}

ScenarioInstance build_acopf3(const AcopfData& data) {
  data.validate();
  ProblemFunctions fns;
  const double a = data.cost_a;
  const double b = data.cost_b;
  fns.objective = [a, b](const Eigen::VectorXd& x) { return a * x(4) * x(4) + b * x(4); };
  fns.gradient = [a, b](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(6);
    g(4) = 2.0 * a * x(4) + b;
    return g;
  };
  fns.hessian = [a](const Eigen::VectorXd&) -> Eigen::MatrixXd {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(6, 6);
    h(4, 4) = 2.0 * a;
    return h;
  };
  // Voltage magnitudes are not sign-restricted here; the map is evaluated on
  // all of R^6 so the flow may pass through non-physical states.
  fns.constraints = [data](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const PowerInjections s = flow_derivatives(bus_voltages(x), bus_angles(x), data).s;
    Eigen::VectorXd h(4);
    h << s.active(1) + data.active_demand(1), s.reactive(1) + data.reactive_demand(1),
        s.active(2) - x(4), s.reactive(2) - x(5);
    return h;
  };
  fns.jacobian = [data](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
    const FlowDerivatives d = flow_derivatives(bus_voltages(x), bus_angles(x), data);
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(4, 6);
    j.block<1, 4>(0, 0) = network_row(d.dp_dtheta, d.dp_dv, 1);
    j.block<1, 4>(1, 0) = network_row(d.dq_dtheta, d.dq_dv, 1);
    j.block<1, 4>(2, 0) = network_row(d.dp_dtheta, d.dp_dv, 2);
    j.block<1, 4>(3, 0) = network_row(d.dq_dtheta, d.dq_dv, 2);
    j(2, 4) = -1.0;
    j(3, 5) = -1.0;
    return j;
  };

  Eigen::VectorXd x0(6);
  x0 << 0.4, -0.3, 0.9, 1.1, 0.5, 0.2;
  return ScenarioInstance{ProblemSpec(6, 4, std::move(fns)), x0,
                          FxtsGains::uniform(4, 4.0, 4.0, 0.5, 2.0), ConvexFlowGains{},
                          FlowLaw{LawKind::kNonconvexFxts}};
}

AcopfReference acopf_feasible_oracle(const AcopfData& data, std::optional<Eigen::VectorXd> start) {
  data.validate();
  const double pg_star = -data.cost_b / (2.0 * data.cost_a);

  Eigen::Vector4d z;
  if (start) {
    if (start->size() != 6) throw InvalidInput("oracle start must be a full AC-OPF state");
    z = start->head<4>();
  } else {
    z << 0.4, -0.3, 0.9, 1.1;
  }

  auto residual = [&](const Eigen::Vector4d& w, FlowDerivatives* out) {
    const FlowDerivatives d =
        flow_derivatives({1.0, w(2), w(3)}, {0.0, w(0), w(1)}, data);
    if (out) *out = d;
    return Eigen::Vector3d(d.s.active(1) + data.active_demand(1),
                           d.s.reactive(1) + data.reactive_demand(1), d.s.active(2) - pg_star);
  };

  constexpr int kMaxIterations = 200;
  FlowDerivatives d;
  Eigen::Vector3d r = residual(z, &d);
  int it = 0;
  for (; it < kMaxIterations && r.norm() > 1e-13; ++it) {
    Eigen::Matrix<double, 3, 4> j;
    j.row(0) = network_row(d.dp_dtheta, d.dp_dv, 1);
    j.row(1) = network_row(d.dq_dtheta, d.dq_dv, 1);
    j.row(2) = network_row(d.dp_dtheta, d.dp_dv, 2);
    // Minimum-norm Newton step for the underdetermined system.
    const Eigen::Vector4d dz = -j.completeOrthogonalDecomposition().solve(r);

    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
      const Eigen::Vector4d trial = z + step * dz;
      const Eigen::Vector3d rt = residual(trial, nullptr);
      if (rt.allFinite() && rt.norm() < (1.0 - 1e-4 * step) * r.norm()) {
        z = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    r = residual(z, &d);
  }
  if (r.norm() > 1e-10) {
    throw OracleFailure("AC-OPF reference Newton iteration did not converge (residual " +
                        std::to_string(r.norm()) + ")");
  }

  AcopfReference ref;
  ref.x.resize(6);
  ref.x << z, pg_star, d.s.reactive(2);
  const ScenarioInstance inst = build_acopf3(data);
  ref.objective = inst.problem.objective(ref.x);
  ref.residual = kkt_residual(inst.problem, ref.x);
  ref.iterations = it;
  if (ref.residual.stationarity > 1e-6 || ref.residual.feasibility > 1e-6) {
    throw OracleFailure("AC-OPF reference failed its KKT certificate");
  }
  return ref;
}

double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(a + std::numbers::pi, two_pi);
  if (w <= 0.0) w += two_pi;
  return w - std::numbers::pi;
}

// ---------------------------------------------------------------------------
// Distributed estimation

Eigen::MatrixXd laplacian_from_edges(int node_count,
                                     const std::vector<std::pair<int, int>>& edges) {
  if (node_count < 2) throw InvalidNetwork("network needs at least two nodes");
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(node_count, node_count);
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= node_count || b >= node_count || a == b) {
      throw InvalidNetwork("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                           ") is out of range or a self-loop");
    }
    if (l(a, b) != 0.0) continue;
    l(a, b) = l(b, a) = -1.0;
    l(a, a) += 1.0;
    l(b, b) += 1.0;
  }
  return l;
}

Eigen::MatrixXd laplacian_path(int node_count) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < node_count; ++i) edges.emplace_back(i, i + 1);
  return laplacian_from_edges(node_count, edges);
}

void EstimationNetwork::validate() const {
  if (node_count < 2 || param_dim < 1) throw InvalidNetwork("bad network dimensions");
  if (laplacian.rows() != node_count || laplacian.cols() != node_count) {
    throw InvalidNetwork("laplacian must be node_count x node_count");
  }
  if ((laplacian - laplacian.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw InvalidNetwork("laplacian must be symmetric");
  }
  if (laplacian.rowwise().sum().cwiseAbs().maxCoeff() > 1e-12) {
    throw InvalidNetwork("laplacian rows must sum to zero");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(laplacian, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues()(1) > 1e-9)) throw InvalidNetwork("communication graph is disconnected");

  const auto nn = static_cast<std::size_t>(node_count);
  if (sensing.size() != nn || noise_cov.size() != nn || measurements.size() != nn) {
    throw InvalidNetwork("need one H_i, R_i and y_i per node");
  }
  if (truth.size() != param_dim) throw InvalidNetwork("truth must have length param_dim");
  for (std::size_t i = 0; i < nn; ++i) {
    const Eigen::Index mi = sensing[i].rows();
    if (sensing[i].cols() != param_dim || measurements[i].size() != mi ||
        noise_cov[i].rows() != mi || noise_cov[i].cols() != mi) {
      throw InvalidNetwork("node " + std::to_string(i) + " has inconsistent dimensions");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(noise_cov[i]);
    if (llt.info() != Eigen::Success ||
        (noise_cov[i] - noise_cov[i].transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw InvalidNetwork("R_" + std::to_string(i) + " must be symmetric positive definite");
    }
  }
}

EstimationNetwork make_estimation_network(const EstimationOptions& options) {
  if (!(options.noise_variance > 0.0)) throw InvalidInput("noise_variance must be positive");
  EstimationNetwork net;
  net.node_count = options.node_count;
  net.param_dim = static_cast<int>(options.truth.size());
  net.laplacian = options.laplacian ? *options.laplacian : laplacian_path(options.node_count);
  net.truth = options.truth;
  net.rng_seed = options.seed;

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int d = net.param_dim;
  const double sigma = std::sqrt(options.noise_variance);
  for (int i = 0; i < net.node_count; ++i) {
    net.sensing.push_back(Eigen::MatrixXd::Identity(d, d));
    net.noise_cov.push_back(options.noise_variance * Eigen::MatrixXd::Identity(d, d));
    Eigen::VectorXd v(d);
    for (int k = 0; k < d; ++k) v(k) = normal(rng);
    net.measurements.push_back(net.truth + (options.add_noise ? sigma : 0.0) * v);
  }
  net.validate();
  return net;
}

ScenarioInstance build_estimation(const EstimationNetwork& net, std::optional<FxtsGains> fxts,
                                  std::optional<ConvexFlowGains> convex) {
  net.validate();
  const int nodes = net.node_count;
  const int d = net.param_dim;
  const int dim = nodes * d;

  std::vector<Eigen::MatrixXd> weight;  // R_i^-1
  std::vector<Eigen::MatrixXd> info;    // H_i^T R_i^-1 H_i
  Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < nodes; ++i) {
    const Eigen::LLT<Eigen::MatrixXd> llt(net.noise_cov[i]);
    weight.push_back(llt.solve(Eigen::MatrixXd::Identity(net.noise_cov[i].rows(),
                                                         net.noise_cov[i].cols())));
    info.push_back(net.sensing[i].transpose() * weight.back() * net.sensing[i]);
    hessian.block(i * d, i * d, d, d) = info.back();
  }

  Eigen::MatrixXd consensus = Eigen::MatrixXd::Zero(dim, dim);  // L kron I
  for (int i = 0; i < nodes; ++i) {
    for (int j = 0; j < nodes; ++j) {
      consensus.block(i * d, j * d, d, d) =
          net.laplacian(i, j) * Eigen::MatrixXd::Identity(d, d);
    }
  }

  ProblemFunctions fns;
  fns.objective = [net, weight, d](const Eigen::VectorXd& x) {
    double total = 0.0;
    for (int i = 0; i < net.node_count; ++i) {
      const Eigen::VectorXd r = net.measurements[i] - net.sensing[i] * x.segment(i * d, d);
      total += 0.5 * r.dot(weight[i] * r);
    }
    return total;
  };
  fns.gradient = [net, weight, d](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd g(x.size());
    for (int i = 0; i < net.node_count; ++i) {
      const Eigen::VectorXd r = net.measurements[i] - net.sensing[i] * x.segment(i * d, d);
      g.segment(i * d, d) = -net.sensing[i].transpose() * (weight[i] * r);
    }
    return g;
  };
  fns.hessian = [hessian](const Eigen::VectorXd&) -> Eigen::MatrixXd { return hessian; };
  fns.constraints = [consensus](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return consensus * x;
  };
  fns.jacobian = [consensus](const Eigen::VectorXd&) -> Eigen::MatrixXd { return consensus; };

  FxtsGains fg = fxts ? *fxts : FxtsGains::uniform(dim, 5.0, 5.0, 0.5, 1.5);
  if (!fxts) {
    fg.switching = SwitchingForm::kNormRegularized;
    fg.norm_epsilon = 1e-6;
  }
  validate(fg, dim);

  ConvexFlowGains cg;
  if (convex) {
    cg = *convex;
  } else {
    cg.gamma1 = 2.0;
    cg.gamma2 = 2.0;
    cg.r1 = 0.5;
    cg.r2 = 1.5;
    cg.epsilon = 1e-6;
    double mu = std::numeric_limits<double>::infinity();
    for (const Eigen::MatrixXd& block : info) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(block, Eigen::EigenvaluesOnly);
      mu = std::min(mu, eig.eigenvalues().minCoeff());
    }
    if (!(mu > 0.0)) throw InvalidNetwork("local information matrices must be positive definite");
    cg.mu = mu;
  }
  validate(cg);

  std::seed_seq seq{static_cast<std::uint32_t>(net.rng_seed),
                    static_cast<std::uint32_t>(net.rng_seed >> 32), 2u};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd x0(dim);
  for (int k = 0; k < dim; ++k) x0(k) = normal(rng);

  return ScenarioInstance{ProblemSpec(dim, dim, std::move(fns)), x0, fg, cg,
                          FlowLaw{LawKind::kConvexFxts}};
}

Eigen::VectorXd centralized_ls_oracle(const EstimationNetwork& net) {
  const int d = net.param_dim;
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < net.node_count; ++i) {
    const Eigen::LLT<Eigen::MatrixXd> llt(net.noise_cov[i]);
    const Eigen::MatrixXd wh = llt.solve(net.sensing[i]);  // R^-1 H
    info += net.sensing[i].transpose() * wh;
    rhs += wh.transpose() * net.measurements[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = eig.eigenvalues();
  if (!(ev.minCoeff() > 1e-12 * std::max(1.0, ev.maxCoeff()))) {
    throw OracleFailure("information matrix is singular");
  }
  return info.ldlt().solve(rhs);
}

// ---------------------------------------------------------------------------

ScenarioInstance build_convex_quadratic(double mu, const Eigen::VectorXd& center,
                                        const Eigen::VectorXd& normal) {
  if (!(mu > 0.0)) throw InvalidInput("mu must be positive");
  if (center.size() != normal.size() || center.size() < 1) {
    throw InvalidInput("center and normal must have equal positive length");
  }
  if (normal.norm() == 0.0) throw InvalidInput("constraint normal must be non-zero");
  const int n = static_cast<int>(center.size());

  ProblemFunctions fns;
  fns.objective = [mu, center](const Eigen::VectorXd& x) {
    return 0.5 * mu * (x - center).squaredNorm();
  };
  fns.gradient = [mu, center](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return mu * (x - center);
  };
  fns.hessian = [mu, n](const Eigen::VectorXd&) -> Eigen::MatrixXd {
    return mu * Eigen::MatrixXd::Identity(n, n);
  };
  fns.constraints = [center, normal](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return Eigen::VectorXd::Constant(1, normal.dot(x - center));
  };
  fns.jacobian = [normal](const Eigen::VectorXd&) -> Eigen::MatrixXd {
    return normal.transpose();
  };

  ConvexFlowGains cg;
  cg.mu = mu;
  return ScenarioInstance{ProblemSpec(n, 1, std::move(fns)),
                          Eigen::VectorXd(center + Eigen::VectorXd::Ones(n)),
                          FxtsGains::uniform(1, 5.0, 5.0, 0.5, 1.5), cg,
                          FlowLaw{LawKind::kConvexFxts}};
}

FlowLaw baseline_pgf(double mu_pgf) {
  if (!(mu_pgf > 0.0)) throw InvalidInput("mu_pgf must be positive");
  return FlowLaw{LawKind::kProjectedGradientBaseline, mu_pgf};
}

}  // namespace fxts
