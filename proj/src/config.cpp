#include "fxts/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fxts/errors.hpp"

namespace fxts {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"scenario", {"name", "law", "x0", "seed"}},
      {"gains",
       {"alpha", "beta", "p", "q", "rho", "eta_bar", "boundary_layer", "switching", "high_order",
        "norm_epsilon"}},
      {"convex", {"gamma1", "gamma2", "r1", "r2", "epsilon", "mu", "high_order", "bound_form"}},
      {"integration",
       {"step", "t_end", "record_stride", "reach_tol", "kkt_tol", "sustain_steps"}},
      {"disturbance", {"amplitude", "frequency", "bound"}},
      {"baseline", {"mu"}},
      {"acopf",
       {"susceptance", "conductance", "active_demand", "reactive_demand", "cost_a", "cost_b"}},
      {"estimation", {"nodes", "truth", "noise_variance", "noise", "edges"}},
      {"quadratic", {"mu", "center", "normal"}},
      {"sweep", {"count", "radius_min", "radius_max", "center"}},
      {"report", {"stationarity_tol", "oracle_tol"}},
      {"output", {"dir"}},
  };
  return keys;
}

std::string where(const std::string& section, const std::string& key) {
  return "[" + section + "] " + key;
}

double to_double(const std::string& text, const std::string& ctx) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError(ctx + ": '" + text + "' is not a number");
  }
  while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
  if (used != text.size() || !std::isfinite(v)) {
    throw ConfigError(ctx + ": '" + text + "' is not a finite number");
  }
  return v;
}

long long to_integer(const std::string& text, const std::string& ctx) {
  const double v = to_double(text, ctx);
  if (v != std::floor(v)) throw ConfigError(ctx + ": expected an integer");
  return static_cast<long long>(v);
}

Eigen::VectorXd to_vector(const std::string& text, const std::string& ctx) {
  std::string cleaned = text;
  for (char& c : cleaned) {
    if (c == ',' || c == ';') c = ' ';
  }
  std::istringstream in(cleaned);
  std::vector<double> values;
  std::string token;
  while (in >> token) values.push_back(to_double(token, ctx));
  if (values.empty()) throw ConfigError(ctx + ": empty list");
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

bool to_bool(const std::string& text, const std::string& ctx) {
  if (text == "true" || text == "on" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "off" || text == "no" || text == "0") return false;
  throw ConfigError(ctx + ": expected on/off");
}

HighOrderTerm to_high_order(const std::string& text, const std::string& ctx) {
  if (text == "growing") return HighOrderTerm::kGrowing;
  if (text == "decaying") return HighOrderTerm::kDecaying;
  throw ConfigError(ctx + ": expected 'growing' or 'decaying'");
}

std::vector<std::pair<int, int>> to_edges(const std::string& text, const std::string& ctx) {
  std::string cleaned = text;
  for (char& c : cleaned) {
    if (c == ',' || c == ';') c = ' ';
  }
  std::istringstream in(cleaned);
  std::vector<std::pair<int, int>> edges;
  std::string token;
  while (in >> token) {
    const auto dash = token.find('-');
    if (dash == std::string::npos) throw ConfigError(ctx + ": edges are written a-b");
    edges.emplace_back(static_cast<int>(to_integer(token.substr(0, dash), ctx)),
                       static_cast<int>(to_integer(token.substr(dash + 1), ctx)));
  }
  return edges;
}

Eigen::Matrix3d to_matrix3(const std::string& text, const std::string& ctx) {
  const Eigen::VectorXd v = to_vector(text, ctx);
  if (v.size() != 9) throw ConfigError(ctx + ": expected 9 row-major entries");
  Eigen::Matrix3d m;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m(i, j) = v(3 * i + j);
  }
  return m;
}

Eigen::Vector3d to_vector3(const std::string& text, const std::string& ctx) {
  const Eigen::VectorXd v = to_vector(text, ctx);
  if (v.size() != 3) throw ConfigError(ctx + ": expected 3 entries");
  return v;
}

// Calls fn(value, context) when `section.key` is present.
template <typename Fn>
void with(const pt::ptree& root, const std::string& section, const std::string& key, Fn&& fn) {
  const auto sec = root.get_child_optional(pt::ptree::path_type(section, '\0'));
  if (!sec) return;
  const auto val = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
  if (val) fn(*val, where(section, key));
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  pt::ptree root;
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.message() + " (line " +
                      std::to_string(e.line()) + ")");
  }

  for (const auto& [section, body] : root) {
    const auto it = known_keys().find(section);
    if (body.empty()) throw ConfigError("key '" + section + "' appears outside any section");
    if (it == known_keys().end()) throw ConfigError("unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) throw ConfigError("unknown key " + where(section, key));
    }
  }

  RunConfig cfg;
  with(root, "scenario", "name", [&](const std::string& v, const std::string& ctx) {
    if (v != "sphere" && v != "acopf3" && v != "estimation" && v != "convex-quadratic") {
      throw ConfigError(ctx + ": unknown scenario '" + v + "'");
    }
    cfg.scenario = v;
  });
  with(root, "scenario", "law", [&](const std::string& v, const std::string&) {
    cfg.law = parse_law(v);
  });
  with(root, "scenario", "x0", [&](const auto& v, const auto& ctx) { cfg.x0 = to_vector(v, ctx); });
  with(root, "scenario", "seed", [&](const auto& v, const auto& ctx) {
    const long long s = to_integer(v, ctx);
    if (s < 0) throw ConfigError(ctx + ": seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(s);
  });

  auto& g = cfg.gains;
  with(root, "gains", "alpha", [&](const auto& v, const auto& ctx) { g.alpha = to_vector(v, ctx); });
  with(root, "gains", "beta", [&](const auto& v, const auto& ctx) { g.beta = to_vector(v, ctx); });
  with(root, "gains", "p", [&](const auto& v, const auto& ctx) { g.p = to_double(v, ctx); });
  with(root, "gains", "q", [&](const auto& v, const auto& ctx) { g.q = to_double(v, ctx); });
  with(root, "gains", "rho", [&](const auto& v, const auto& ctx) { g.rho = to_double(v, ctx); });
  with(root, "gains", "eta_bar", [&](const auto& v, const auto& ctx) { g.eta_bar = to_double(v, ctx); });
  with(root, "gains", "boundary_layer",
       [&](const auto& v, const auto& ctx) { g.boundary_layer = to_double(v, ctx); });
  with(root, "gains", "norm_epsilon",
       [&](const auto& v, const auto& ctx) { g.norm_epsilon = to_double(v, ctx); });
  with(root, "gains", "switching", [&](const std::string& v, const std::string& ctx) {
    if (v == "elementwise") {
      g.switching = SwitchingForm::kElementwise;
    } else if (v == "norm") {
      g.switching = SwitchingForm::kNormRegularized;
    } else {
      throw ConfigError(ctx + ": expected 'elementwise' or 'norm'");
    }
  });
  with(root, "gains", "high_order", [&](const auto& v, const auto& ctx) { g.high_order = to_high_order(v, ctx); });

  auto& c = cfg.convex;
  with(root, "convex", "gamma1", [&](const auto& v, const auto& ctx) { c.gamma1 = to_double(v, ctx); });
  with(root, "convex", "gamma2", [&](const auto& v, const auto& ctx) { c.gamma2 = to_double(v, ctx); });
  with(root, "convex", "r1", [&](const auto& v, const auto& ctx) { c.r1 = to_double(v, ctx); });
  with(root, "convex", "r2", [&](const auto& v, const auto& ctx) { c.r2 = to_double(v, ctx); });
  with(root, "convex", "epsilon", [&](const auto& v, const auto& ctx) { c.epsilon = to_double(v, ctx); });
  with(root, "convex", "mu", [&](const auto& v, const auto& ctx) { c.mu = to_double(v, ctx); });
  with(root, "convex", "high_order", [&](const auto& v, const auto& ctx) { c.high_order = to_high_order(v, ctx); });
  with(root, "convex", "bound_form", [&](const std::string& v, const std::string& ctx) {
    if (v == "statement") {
      cfg.bound_form = ConvexBoundForm::kStatement;
    } else if (v == "proof") {
      cfg.bound_form = ConvexBoundForm::kProof;
    } else {
      throw ConfigError(ctx + ": expected 'statement' or 'proof'");
    }
  });

  auto& ic = cfg.integration;
  with(root, "integration", "step", [&](const auto& v, const auto& ctx) { ic.step = to_double(v, ctx); });
  with(root, "integration", "t_end", [&](const auto& v, const auto& ctx) { ic.t_end = to_double(v, ctx); });
  with(root, "integration", "record_stride",
       [&](const auto& v, const auto& ctx) { ic.record_stride = static_cast<int>(to_integer(v, ctx)); });
  with(root, "integration", "reach_tol", [&](const auto& v, const auto& ctx) { ic.reach_tol = to_double(v, ctx); });
  with(root, "integration", "kkt_tol", [&](const auto& v, const auto& ctx) { ic.kkt_tol = to_double(v, ctx); });
  with(root, "integration", "sustain_steps",
       [&](const auto& v, const auto& ctx) { ic.sustain_steps = static_cast<int>(to_integer(v, ctx)); });

  if (root.get_child_optional("disturbance")) {
    DisturbanceConfig d;
    with(root, "disturbance", "amplitude", [&](const auto& v, const auto& ctx) { d.amplitude = to_double(v, ctx); });
    with(root, "disturbance", "frequency", [&](const auto& v, const auto& ctx) { d.frequency = to_double(v, ctx); });
    with(root, "disturbance", "bound", [&](const auto& v, const auto& ctx) { d.bound = to_double(v, ctx); });
    if (d.amplitude < 0.0) throw ConfigError("[disturbance] amplitude must be non-negative");
    cfg.disturbance = d;
  }
  with(root, "baseline", "mu", [&](const auto& v, const auto& ctx) { cfg.baseline_mu = to_double(v, ctx); });

  auto& a = cfg.acopf;
  with(root, "acopf", "susceptance", [&](const auto& v, const auto& ctx) { a.susceptance = to_matrix3(v, ctx); });
  with(root, "acopf", "conductance", [&](const auto& v, const auto& ctx) { a.conductance = to_matrix3(v, ctx); });
  with(root, "acopf", "active_demand", [&](const auto& v, const auto& ctx) { a.active_demand = to_vector3(v, ctx); });
  with(root, "acopf", "reactive_demand",
       [&](const auto& v, const auto& ctx) { a.reactive_demand = to_vector3(v, ctx); });
  with(root, "acopf", "cost_a", [&](const auto& v, const auto& ctx) { a.cost_a = to_double(v, ctx); });
  with(root, "acopf", "cost_b", [&](const auto& v, const auto& ctx) { a.cost_b = to_double(v, ctx); });

  auto& e = cfg.estimation;
  with(root, "estimation", "nodes", [&](const auto& v, const auto& ctx) { e.nodes = static_cast<int>(to_integer(v, ctx)); });
  with(root, "estimation", "truth", [&](const auto& v, const auto& ctx) { e.truth = to_vector(v, ctx); });
  with(root, "estimation", "noise_variance",
       [&](const auto& v, const auto& ctx) { e.noise_variance = to_double(v, ctx); });
  with(root, "estimation", "noise", [&](const auto& v, const auto& ctx) { e.noise = to_bool(v, ctx); });
  with(root, "estimation", "edges", [&](const auto& v, const auto& ctx) { e.edges = to_edges(v, ctx); });

  auto& qc = cfg.quadratic;
  with(root, "quadratic", "mu", [&](const auto& v, const auto& ctx) { qc.mu = to_double(v, ctx); });
  with(root, "quadratic", "center", [&](const auto& v, const auto& ctx) { qc.center = to_vector(v, ctx); });
  with(root, "quadratic", "normal", [&](const auto& v, const auto& ctx) { qc.normal = to_vector(v, ctx); });

  auto& sw = cfg.sweep;
  with(root, "sweep", "count", [&](const auto& v, const auto& ctx) { sw.count = static_cast<int>(to_integer(v, ctx)); });
  with(root, "sweep", "radius_min", [&](const auto& v, const auto& ctx) { sw.radius_min = to_double(v, ctx); });
  with(root, "sweep", "radius_max", [&](const auto& v, const auto& ctx) { sw.radius_max = to_double(v, ctx); });
  with(root, "sweep", "center", [&](const auto& v, const auto& ctx) { sw.center = to_vector(v, ctx); });

  with(root, "report", "stationarity_tol",
       [&](const auto& v, const auto& ctx) { cfg.tolerances.stationarity = to_double(v, ctx); });
  with(root, "report", "oracle_tol", [&](const auto& v, const auto& ctx) { cfg.tolerances.oracle = to_double(v, ctx); });
  with(root, "output", "dir", [&](const std::string& v, const std::string&) { cfg.output_dir = v; });

  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in);
}

}  // namespace fxts
