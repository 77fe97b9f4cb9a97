#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <yaml-cpp/yaml.h>

#include "bearing/configuration.hpp"
#include "bearing/error.hpp"
#include "bearing/formation.hpp"
#include "bearing/graph.hpp"
#include "bearing/laplacian.hpp"
#include "bearing/localization.hpp"
#include "bearing/simulation.hpp"

namespace bearing {

enum class ScenarioKind { FormationLeaderless, FormationLeaderFollower, Localization };

constexpr std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::FormationLeaderless: return "formation-leaderless";
    case ScenarioKind::FormationLeaderFollower: return "formation-leader-follower";
    case ScenarioKind::Localization: return "localization";
  }
  return "unknown";
}

inline ScenarioKind parse_kind(std::string_view s) {
  if (s == "formation-leaderless") return ScenarioKind::FormationLeaderless;
  if (s == "formation-leader-follower") return ScenarioKind::FormationLeaderFollower;
  if (s == "localization") return ScenarioKind::Localization;
  throw Error(ErrorCode::ValidationError, "kind: unknown scenario kind '" + std::string(s) + "'");
}

struct ConstraintEntry {
  Index from = 0;
  Index to = 0;
  Eigen::VectorXd bearing;  // g*_{from,to}
};

struct InitialSpec {
  bool random = true;
  std::uint64_t seed = 0;
  double low = -1.0;
  double high = 1.0;
  Eigen::VectorXd positions;  // explicit mode only
};

struct IntegratorSpec {
  Method method = Method::RK4;
  std::optional<double> dt;  // empty = choose from the dynamics matrix
  double max_time = 200.0;
  double tolerance = 1e-9;
  Index record_stride = 10;
};

/// Thresholds a run must meet for a zero exit code. Unset entries are
/// reported but not enforced.
struct Assertions {
  std::optional<double> max_bearing_error;
  std::optional<double> equilibrium_deviation;  // max coordinate deviation from the closed form
  std::optional<double> centroid_drift;         // relative to |p(0)|
  std::optional<double> scale_increase;         // s(end) - s(0) upper bound
  std::optional<double> max_localization_error; // relative to the network diameter
  std::optional<double> closed_form_error;      // relative to the network diameter
  bool require_convergence = false;
};

struct Scenario {
  std::string name;
  ScenarioKind kind = ScenarioKind::FormationLeaderless;
  int dim = 2;
  Index agents = 0;
  std::vector<std::pair<Index, Index>> edges;

  // Formation control.
  std::vector<ConstraintEntry> constraints;
  std::vector<Index> leaders;
  Eigen::VectorXd leader_positions;  // stacked in the order of `leaders`

  // Localization.
  Eigen::VectorXd positions;  // true configuration
  std::vector<Index> anchors;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;

  InitialSpec initial;
  IntegratorSpec integrator;
  Assertions assertions;
  std::string output;

  /// Load-time notes that do not block a run (e.g. a single anchor).
  std::vector<std::string> warnings;
  /// p(0) or p_hat(0), materialized from `initial`.
  Eigen::VectorXd initial_state;

  Graph graph() const { return Graph::build(agents, edges); }

  BearingConstraintSet constraint_set() const {
    BearingConstraintSet cs(graph(), dim);
    for (const auto& c : constraints) cs.set(c.from, c.to, c.bearing);
    cs.validate();
    return cs;
  }

  FormationProblem formation_problem() const {
    return FormationProblem{constraint_set(), leaders, leader_positions, initial_state};
  }

  LocalizationProblem localization_problem() const {
    return LocalizationProblem::make(Framework(graph(), Configuration(dim, positions)), anchors, initial_state,
                                     noise_sigma, noise_seed);
  }
};

inline Eigen::VectorXd materialize_initial(const InitialSpec& spec, Index size) {
  if (!spec.random) return spec.positions;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> coord(spec.low, spec.high);
  Eigen::VectorXd x(size);
  for (Index i = 0; i < size; ++i) x(i) = coord(rng);
  return x;
}

namespace detail {

[[noreturn]] inline void invalid(const std::string& field, const std::string& msg) {
  throw Error(ErrorCode::ValidationError, field + ": " + msg);
}

inline Eigen::VectorXd read_vector(const YAML::Node& node, const std::string& field) {
  if (!node || !node.IsSequence()) invalid(field, "expected a list of numbers");
  Eigen::VectorXd v(static_cast<Index>(node.size()));
  for (std::size_t i = 0; i < node.size(); ++i) {
    try {
      v(static_cast<Index>(i)) = node[i].as<double>();
    } catch (const YAML::Exception&) {
      throw Error(ErrorCode::ParseError, field + "[" + std::to_string(i) + "]: not a number");
    }
  }
  return v;
}

inline Eigen::VectorXd read_points(const YAML::Node& node, const std::string& field, int dim) {
  if (!node || !node.IsSequence()) invalid(field, "expected a list of points");
  Eigen::VectorXd p(static_cast<Index>(node.size()) * dim);
  for (std::size_t i = 0; i < node.size(); ++i) {
    const std::string f = field + "[" + std::to_string(i) + "]";
    const Eigen::VectorXd pt = read_vector(node[i], f);
    if (pt.size() != dim) invalid(f, "expected " + std::to_string(dim) + " coordinates, got " + std::to_string(pt.size()));
    p.segment(static_cast<Index>(i) * dim, dim) = pt;
  }
  return p;
}

template <class T>
T read_scalar(const YAML::Node& node, const std::string& field) {
  if (!node) invalid(field, "missing");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw Error(ErrorCode::ParseError, field + ": wrong type");
  }
}

inline std::optional<double> read_optional(const YAML::Node& node, const std::string& key) {
  if (!node || !node[key]) return std::nullopt;
  return read_scalar<double>(node[key], "assertions." + key);
}

inline void emit_vector(YAML::Emitter& out, const Eigen::Ref<const Eigen::VectorXd>& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (Index i = 0; i < v.size(); ++i) out << v(i);
  out << YAML::EndSeq;
}

inline void emit_points(YAML::Emitter& out, const Eigen::VectorXd& p, int dim) {
  out << YAML::BeginSeq;
  for (Index i = 0; i < p.size() / dim; ++i) emit_vector(out, p.segment(i * dim, dim));
  out << YAML::EndSeq;
}

}  // namespace detail

/// Checks every per-kind precondition; throws ValidationError naming the
/// offending field.
inline void validate_scenario(Scenario& s) {
  using detail::invalid;
  if (s.dim < 2) invalid("dimension", "must be >= 2");
  if (s.agents < 2) invalid("agents", "must be >= 2");
  Graph g;
  try {
    g = s.graph();
  } catch (const Error& e) {
    invalid("edges", e.what());
  }
  if (!g.is_connected()) invalid("edges", "graph is not connected");
  const Index dn = s.agents * s.dim;
  s.warnings.clear();

  if (s.kind == ScenarioKind::Localization) {
    if (s.positions.size() != dn) invalid("positions", "expected " + std::to_string(s.agents) + " points");
    if (s.anchors.empty()) invalid("anchors", "localization needs at least one anchor");
    for (Index a : s.anchors) {
      if (a < 0 || a >= s.agents) invalid("anchors", "vertex " + std::to_string(a) + " out of range");
    }
    if (s.anchors.size() < 2) {
      s.warnings.push_back("anchors: fewer than 2 anchors; the estimator has no unique equilibrium");
    }
    if (!s.constraints.empty()) invalid("constraints", "not used by localization scenarios");
    try {
      (void)bearing_function(Framework(g, Configuration(s.dim, s.positions)));
    } catch (const Error& e) {
      invalid("positions", e.what());
    }
  } else {
    if (s.constraints.empty()) invalid("constraints", "formation scenarios need bearing constraints");
    for (std::size_t c = 0; c < s.constraints.size(); ++c) {
      if (s.constraints[c].bearing.size() != s.dim) {
        invalid("constraints[" + std::to_string(c) + "].bearing", "wrong dimension");
      }
    }
    try {
      (void)s.constraint_set();
    } catch (const Error& e) {
      invalid("constraints", e.what());
    }
    if (s.kind == ScenarioKind::FormationLeaderless && !s.leaders.empty()) {
      invalid("leaders", "leaderless scenarios cannot declare leaders");
    }
    if (s.kind == ScenarioKind::FormationLeaderFollower) {
      if (s.leaders.empty()) invalid("leaders", "leader-follower scenarios need at least one leader");
      if (s.leader_positions.size() != static_cast<Index>(s.leaders.size()) * s.dim) {
        invalid("leaders", "every leader needs a position");
      }
      for (Index l : s.leaders) {
        if (l < 0 || l >= s.agents) invalid("leaders", "vertex " + std::to_string(l) + " out of range");
      }
      if (s.leaders.size() < 2) {
        s.warnings.push_back("leaders: with a single leader L_ff is singular; no closed-form equilibrium");
      }
    }
  }
  if (!s.initial.random && s.initial.positions.size() != dn) {
    invalid("initial.positions", "expected " + std::to_string(s.agents) + " points");
  }
  if (s.initial.random && !(s.initial.high > s.initial.low)) invalid("initial", "need high > low");
  if (s.integrator.dt && !(*s.integrator.dt > 0.0)) invalid("integrator.dt", "must be positive");
  if (!(s.integrator.max_time > 0.0)) invalid("integrator.max_time", "must be positive");
  if (s.integrator.record_stride < 1) invalid("integrator.record_stride", "must be >= 1");
  s.initial_state = materialize_initial(s.initial, dn);
}

inline Scenario parse_scenario(const YAML::Node& root) {
  using detail::invalid;
  using detail::read_scalar;
  if (!root || !root.IsMap()) throw Error(ErrorCode::ParseError, "scenario must be a mapping");
  Scenario s;
  s.name = root["name"] ? read_scalar<std::string>(root["name"], "name") : "scenario";
  s.kind = parse_kind(read_scalar<std::string>(root["kind"], "kind"));
  s.dim = read_scalar<int>(root["dimension"], "dimension");
  s.agents = read_scalar<Index>(root["agents"], "agents");

  const YAML::Node edges = root["edges"];
  if (!edges || !edges.IsSequence()) invalid("edges", "expected a list of [i, j] pairs");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const std::string f = "edges[" + std::to_string(k) + "]";
    if (!edges[k].IsSequence() || edges[k].size() != 2) invalid(f, "expected [i, j]");
    s.edges.emplace_back(read_scalar<Index>(edges[k][0], f), read_scalar<Index>(edges[k][1], f));
  }

  if (const YAML::Node cs = root["constraints"]) {
    for (std::size_t c = 0; c < cs.size(); ++c) {
      const std::string f = "constraints[" + std::to_string(c) + "]";
      const YAML::Node e = cs[c]["edge"];
      if (!e || !e.IsSequence() || e.size() != 2) invalid(f + ".edge", "expected [i, j]");
      s.constraints.push_back(ConstraintEntry{read_scalar<Index>(e[0], f + ".edge"), read_scalar<Index>(e[1], f + ".edge"),
                                              detail::read_vector(cs[c]["bearing"], f + ".bearing")});
    }
  }
  if (const YAML::Node ls = root["leaders"]) {
    if (!ls.IsSequence()) invalid("leaders", "expected a list");
    s.leader_positions.resize(static_cast<Index>(ls.size()) * s.dim);
    for (std::size_t a = 0; a < ls.size(); ++a) {
      const std::string f = "leaders[" + std::to_string(a) + "]";
      s.leaders.push_back(read_scalar<Index>(ls[a]["agent"], f + ".agent"));
      const Eigen::VectorXd pos = detail::read_vector(ls[a]["position"], f + ".position");
      if (pos.size() != s.dim) invalid(f + ".position", "wrong dimension");
      s.leader_positions.segment(static_cast<Index>(a) * s.dim, s.dim) = pos;
    }
  }
  if (const YAML::Node ps = root["positions"]) s.positions = detail::read_points(ps, "positions", s.dim);
  if (const YAML::Node as = root["anchors"]) {
    if (!as.IsSequence()) invalid("anchors", "expected a list of agent indices");
    for (std::size_t a = 0; a < as.size(); ++a) {
      s.anchors.push_back(read_scalar<Index>(as[a], "anchors[" + std::to_string(a) + "]"));
    }
  } else if (s.kind == ScenarioKind::Localization) {
    invalid("anchors", "missing");
  }
  if (const YAML::Node noise = root["measurement_noise"]) {
    s.noise_sigma = noise["sigma"] ? read_scalar<double>(noise["sigma"], "measurement_noise.sigma") : 0.0;
    s.noise_seed = noise["seed"] ? read_scalar<std::uint64_t>(noise["seed"], "measurement_noise.seed") : 0;
  }

  const YAML::Node init = root["initial"];
  if (!init) invalid("initial", "missing");
  const auto mode = read_scalar<std::string>(init["mode"], "initial.mode");
  if (mode == "random") {
    s.initial.random = true;
    s.initial.seed = read_scalar<std::uint64_t>(init["seed"], "initial.seed");
    if (init["low"]) s.initial.low = read_scalar<double>(init["low"], "initial.low");
    if (init["high"]) s.initial.high = read_scalar<double>(init["high"], "initial.high");
  } else if (mode == "explicit") {
    s.initial.random = false;
    s.initial.positions = detail::read_points(init["positions"], "initial.positions", s.dim);
  } else {
    invalid("initial.mode", "expected 'random' or 'explicit'");
  }

  if (const YAML::Node in = root["integrator"]) {
    if (in["method"]) s.integrator.method = parse_method(read_scalar<std::string>(in["method"], "integrator.method"));
    if (in["dt"] && !(in["dt"].IsScalar() && in["dt"].Scalar() == "auto")) {
      s.integrator.dt = read_scalar<double>(in["dt"], "integrator.dt");
    }
    if (in["max_time"]) s.integrator.max_time = read_scalar<double>(in["max_time"], "integrator.max_time");
    if (in["tolerance"]) s.integrator.tolerance = read_scalar<double>(in["tolerance"], "integrator.tolerance");
    if (in["record_stride"]) {
      s.integrator.record_stride = read_scalar<Index>(in["record_stride"], "integrator.record_stride");
    }
  }
  if (const YAML::Node as = root["assertions"]) {
    s.assertions.max_bearing_error = detail::read_optional(as, "max_bearing_error");
    s.assertions.equilibrium_deviation = detail::read_optional(as, "equilibrium_deviation");
    s.assertions.centroid_drift = detail::read_optional(as, "centroid_drift");
    s.assertions.scale_increase = detail::read_optional(as, "scale_increase");
    s.assertions.max_localization_error = detail::read_optional(as, "max_localization_error");
    s.assertions.closed_form_error = detail::read_optional(as, "closed_form_error");
    if (as["require_convergence"]) {
      s.assertions.require_convergence = read_scalar<bool>(as["require_convergence"], "assertions.require_convergence");
    }
  }
  if (root["output"]) s.output = read_scalar<std::string>(root["output"], "output");

  validate_scenario(s);
  return s;
}

inline Scenario parse_scenario_text(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return parse_scenario(root);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

/// Serialize with 17 significant digits so that parsing reproduces every
/// number exactly. Random initial states are stored as their seed.
inline std::string to_yaml(const Scenario& s) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << s.name;
  out << YAML::Key << "kind" << YAML::Value << std::string(to_string(s.kind));
  out << YAML::Key << "dimension" << YAML::Value << s.dim;
  out << YAML::Key << "agents" << YAML::Value << s.agents;
  out << YAML::Key << "edges" << YAML::Value << YAML::BeginSeq;
  for (const auto& [i, j] : s.edges) out << YAML::Flow << YAML::BeginSeq << i << j << YAML::EndSeq;
  out << YAML::EndSeq;
  if (!s.constraints.empty()) {
    out << YAML::Key << "constraints" << YAML::Value << YAML::BeginSeq;
    for (const auto& c : s.constraints) {
      out << YAML::BeginMap;
      out << YAML::Key << "edge" << YAML::Value << YAML::Flow << YAML::BeginSeq << c.from << c.to << YAML::EndSeq;
      out << YAML::Key << "bearing" << YAML::Value;
      detail::emit_vector(out, c.bearing);
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  if (!s.leaders.empty()) {
    out << YAML::Key << "leaders" << YAML::Value << YAML::BeginSeq;
    for (std::size_t a = 0; a < s.leaders.size(); ++a) {
      out << YAML::BeginMap << YAML::Key << "agent" << YAML::Value << s.leaders[a];
      out << YAML::Key << "position" << YAML::Value;
      detail::emit_vector(out, s.leader_positions.segment(static_cast<Index>(a) * s.dim, s.dim));
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  if (s.kind == ScenarioKind::Localization) {
    out << YAML::Key << "positions" << YAML::Value;
    detail::emit_points(out, s.positions, s.dim);
    out << YAML::Key << "anchors" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (Index a : s.anchors) out << a;
    out << YAML::EndSeq;
    if (s.noise_sigma > 0.0) {
      out << YAML::Key << "measurement_noise" << YAML::Value << YAML::BeginMap;
      out << YAML::Key << "sigma" << YAML::Value << s.noise_sigma;
      out << YAML::Key << "seed" << YAML::Value << s.noise_seed << YAML::EndMap;
    }
  }
  out << YAML::Key << "initial" << YAML::Value << YAML::BeginMap;
  if (s.initial.random) {
    out << YAML::Key << "mode" << YAML::Value << "random";
    out << YAML::Key << "seed" << YAML::Value << s.initial.seed;
    out << YAML::Key << "low" << YAML::Value << s.initial.low;
    out << YAML::Key << "high" << YAML::Value << s.initial.high;
  } else {
    out << YAML::Key << "mode" << YAML::Value << "explicit";
    out << YAML::Key << "positions" << YAML::Value;
    detail::emit_points(out, s.initial.positions, s.dim);
  }
  out << YAML::EndMap;
  out << YAML::Key << "integrator" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "method" << YAML::Value << std::string(to_string(s.integrator.method));
  out << YAML::Key << "dt" << YAML::Value;
  if (s.integrator.dt) {
    out << *s.integrator.dt;
  } else {
    out << "auto";
  }
  out << YAML::Key << "max_time" << YAML::Value << s.integrator.max_time;
  out << YAML::Key << "tolerance" << YAML::Value << s.integrator.tolerance;
  out << YAML::Key << "record_stride" << YAML::Value << s.integrator.record_stride;
  out << YAML::EndMap;
  out << YAML::Key << "assertions" << YAML::Value << YAML::BeginMap;
  auto opt = [&](const char* key, const std::optional<double>& v) {
    if (v) out << YAML::Key << key << YAML::Value << *v;
  };
  opt("max_bearing_error", s.assertions.max_bearing_error);
  opt("equilibrium_deviation", s.assertions.equilibrium_deviation);
  opt("centroid_drift", s.assertions.centroid_drift);
  opt("scale_increase", s.assertions.scale_increase);
  opt("max_localization_error", s.assertions.max_localization_error);
  opt("closed_form_error", s.assertions.closed_form_error);
  out << YAML::Key << "require_convergence" << YAML::Value << s.assertions.require_convergence;
  out << YAML::EndMap;
  if (!s.output.empty()) out << YAML::Key << "output" << YAML::Value << s.output;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

inline void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::ValidationError, "cannot write " + path);
  f << to_yaml(s);
}

/// 64-bit FNV-1a of the serialized scenario, printed in reports.
inline std::string scenario_digest(const Scenario& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : to_yaml(s)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  std::string hex = os.str();
  return std::string(16 - hex.size(), '0') + hex;
}

}  // namespace bearing
