#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bearing/configuration.hpp"
#include "bearing/formation.hpp"
#include "bearing/laplacian.hpp"
#include "bearing/localization.hpp"
#include "bearing/rigidity.hpp"
#include "bearing/scenario.hpp"
#include "bearing/simulation.hpp"

namespace bearing {

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
  std::string note;
};

struct RunReport {
  std::string scenario;
  std::string kind;
  std::string digest;
  int dim = 0;
  Index agents = 0;
  Index edges = 0;

  // Rigidity of the target representative (formation) or the true network.
  Index rank = 0;
  Index required_rank = 0;
  bool rigid = false;
  bool feasible = true;

  std::optional<Eigen::VectorXd> predicted;
  std::string outcome;  // formation: target / reflected / rendezvous
  std::optional<Eigen::VectorXd> final_state;
  double max_error = std::numeric_limits<double>::quiet_NaN();
  double convergence_time = std::numeric_limits<double>::quiet_NaN();
  std::string termination;
  double dt = 0.0;
  std::string method;

  std::vector<std::string> warnings;
  std::vector<std::string> errors;
  std::vector<Check> checks;
  std::vector<std::pair<std::string, double>> metrics;

  bool passed() const {
    if (!errors.empty()) return false;
    for (const auto& c : checks) {
      if (!c.passed) return false;
    }
    return true;
  }
};

namespace detail {

inline nlohmann::json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline void check_upper(RunReport& rep, const std::string& name, const std::optional<double>& threshold, double value,
                        const std::string& note = {}) {
  if (!threshold) return;
  rep.checks.push_back(Check{name, value, *threshold, value <= *threshold, note});
}

inline void analyze_into(const Scenario& s, RunReport& rep) {
  if (s.kind == ScenarioKind::Localization) {
    const RigidityReport rr = is_infinitesimally_bearing_rigid(Framework(s.graph(), Configuration(s.dim, s.positions)));
    rep.rank = rr.rank;
    rep.required_rank = rr.required_rank;
    rep.rigid = rr.rigid;
    if (!rr.rigid) rep.warnings.push_back("network is not infinitesimally bearing rigid");
    return;
  }
  const FormationAnalysis fa = analyze_formation(s.formation_problem());
  rep.feasible = fa.feasibility.feasible;
  if (!fa.feasibility.feasible) {
    rep.errors.push_back("infeasible bearing constraints: " + fa.feasibility.reason);
    return;
  }
  rep.rank = fa.rigidity->rank;
  rep.required_rank = fa.rigidity->required_rank;
  rep.rigid = fa.rigidity->rigid;
  if (!rep.rigid) rep.warnings.push_back("target formation is not infinitesimally bearing rigid");
  if (fa.definiteness && !fa.definiteness->positive_definite) {
    rep.warnings.push_back("L_ff is not positive definite (fewer than 2 leaders?)");
  }
  if (fa.leader_check && !fa.leader_check->feasible) {
    rep.warnings.push_back("leader positions fail the feasibility test (residual " +
                           std::to_string(fa.leader_check->residual) + ")");
  }
}

inline void predict_into(const Scenario& s, RunReport& rep) {
  if (!rep.errors.empty()) return;
  try {
    if (s.kind == ScenarioKind::FormationLeaderless) {
      const auto fe = check_constraint_feasibility(s.constraint_set());
      const LeaderlessPrediction lp = predict_leaderless_equilibrium(s.initial_state, fe.representative, s.dim);
      rep.predicted = lp.final_state;
      rep.outcome = std::string(to_string(lp.outcome));
      rep.metrics.emplace_back("predicted_scale", lp.scale);
      rep.metrics.emplace_back("initial_scale", centered(s.initial_state, s.dim).norm());
    } else if (s.kind == ScenarioKind::FormationLeaderFollower) {
      const FormationProblem fp = s.formation_problem();
      const RolePartition part = partition(assemble_laplacian(fp.constraints), fp.leaders);
      const LeaderFollowerPrediction lf = predict_leader_follower_equilibrium(part, fp.leader_positions);
      rep.predicted = lf.final_state;
      rep.metrics.emplace_back("leader_feasibility_residual", lf.feasibility.residual);
      if (lf.infeasible_leaders) rep.warnings.push_back("InfeasibleLeaders: predicted formation will miss some bearings");
    } else {
      const LocalizationProblem lp = s.localization_problem();
      const RolePartition part = partition(assemble_laplacian(lp.measurements), lp.anchors);
      const Eigen::VectorXd pf = localize_closed_form(part, lp.anchor_positions());
      rep.predicted = part.scatter(lp.anchor_positions(), pf);
    }
  } catch (const Error& e) {
    rep.warnings.push_back(std::string("no closed-form equilibrium: ") + e.what());
  }
}

inline RunReport base_report(const Scenario& s) {
  RunReport rep;
  rep.scenario = s.name;
  rep.kind = std::string(to_string(s.kind));
  rep.digest = scenario_digest(s);
  rep.dim = s.dim;
  rep.agents = s.agents;
  rep.edges = static_cast<Index>(s.edges.size());
  rep.warnings = s.warnings;
  return rep;
}

}  // namespace detail

/// Rigidity diagnostics only.
inline RunReport analyze_scenario(const Scenario& s) {
  RunReport rep = detail::base_report(s);
  try {
    detail::analyze_into(s, rep);
  } catch (const Error& e) {
    rep.errors.push_back(e.what());
  }
  return rep;
}

/// Rigidity diagnostics plus the closed-form equilibrium.
inline RunReport predict_scenario(const Scenario& s) {
  RunReport rep = analyze_scenario(s);
  detail::predict_into(s, rep);
  return rep;
}

struct RunOutput {
  RunReport report;
  Trajectory trajectory;
};

/// Full pipeline: pre-checks, prediction, simulation and post-checks
/// against the scenario's assertions.
inline RunOutput run_scenario(const Scenario& s) {
  RunOutput out;
  RunReport& rep = out.report;
  rep = predict_scenario(s);
  if (!rep.errors.empty()) return out;

  const int d = s.dim;
  const Eigen::VectorXd x0 = s.kind == ScenarioKind::Localization ? s.localization_problem().initial_state()
                                                                   : s.formation_problem().initial_state();
  // Dynamics matrix restricted to the moving agents.
  BearingConstraintSet bearings;
  std::vector<Index> fixed;
  std::optional<LocalizationProblem> loc;
  if (s.kind == ScenarioKind::Localization) {
    loc = s.localization_problem();
    bearings = loc->measurements;
    fixed = loc->anchors;
  } else {
    bearings = s.constraint_set();
    fixed = s.leaders;
  }
  const BearingLaplacian lap = assemble_laplacian(bearings);
  const Eigen::MatrixXd dyn = fixed.empty() ? lap.matrix : partition(lap, fixed).ff;

  IntegratorConfig cfg;
  cfg.method = s.integrator.method;
  cfg.max_time = s.integrator.max_time;
  cfg.tolerance = s.integrator.tolerance;
  cfg.record_stride = s.integrator.record_stride;
  const StabilityVerdict probe = stability_check(dyn, cfg);
  cfg.dt = s.integrator.dt.value_or(auto_dt(probe.lambda_max));
  const StabilityVerdict verdict = stability_check(probe.lambda_max, cfg);
  rep.dt = cfg.dt;
  rep.method = std::string(to_string(cfg.method));
  if (!verdict.stable) {
    std::ostringstream msg;
    msg << std::setprecision(6) << "unstable step dt=" << cfg.dt << " (lambda_max=" << verdict.lambda_max
        << ", limit " << verdict.max_stable_dt << "); suggested dt=" << verdict.suggested_dt;
    rep.errors.push_back(msg.str());
    return out;
  }

  std::vector<Observer> observers;
  for (int c = 0; c < d; ++c) {
    observers.push_back({"centroid_" + std::to_string(c), [d, c](const Eigen::VectorXd& x) { return centroid(x, d)(c); }});
  }
  observers.push_back({"scale", [d](const Eigen::VectorXd& x) { return centered(x, d).norm(); }});
  if (loc) {
    const Eigen::VectorXd truth = s.positions;
    observers.push_back({"max_localization_error",
                         [truth, d](const Eigen::VectorXd& x) { return localization_errors(x, truth, d).max; }});
  } else {
    observers.push_back({"max_bearing_error",
                         [&bearings](const Eigen::VectorXd& x) { return bearing_errors(x, bearings).max; }});
  }

  auto field = [&](const Eigen::VectorXd& x) {
    return detail::projected_consensus(bearings, x, detail::role_mask(s.agents, fixed));
  };
  out.trajectory = integrate(field, x0, cfg, observers);
  const Trajectory& traj = out.trajectory;
  const Eigen::VectorXd& xf = traj.final_state();
  rep.final_state = xf;
  rep.termination = std::string(to_string(traj.termination));
  rep.convergence_time = traj.final_time();
  if (traj.termination == Termination::Error) rep.errors.push_back("simulation stopped: " + traj.error);
  if (s.assertions.require_convergence) {
    rep.checks.push_back(Check{"converged", traj.termination == Termination::Converged ? 1.0 : 0.0, 1.0,
                               traj.termination == Termination::Converged, rep.termination});
  }
  if (rep.predicted) {
    const double dev = (xf - *rep.predicted).cwiseAbs().maxCoeff();
    rep.metrics.emplace_back("equilibrium_deviation", dev);
    if (loc) {
      const double diam = diameter(loc->truth.config);
      const double cf = localization_errors(*rep.predicted, s.positions, d).max / diam;
      rep.metrics.emplace_back("closed_form_error_rel", cf);
      detail::check_upper(rep, "closed_form_error", s.assertions.closed_form_error, cf, "relative to diameter");
    } else {
      detail::check_upper(rep, "equilibrium_deviation", s.assertions.equilibrium_deviation, dev);
    }
  }

  if (loc) {
    const double diam = diameter(loc->truth.config);
    const double err = localization_errors(xf, s.positions, d).max / diam;
    rep.max_error = err;
    rep.metrics.emplace_back("max_localization_error_rel", err);
    detail::check_upper(rep, "max_localization_error", s.assertions.max_localization_error, err,
                        "relative to diameter");
    return out;
  }

  const double drift = (centroid(xf, d) - centroid(x0, d)).norm() / std::max(x0.norm(), 1e-300);
  const double s0 = centered(x0, d).norm();
  const double sf = centered(xf, d).norm();
  rep.metrics.emplace_back("centroid_drift_rel", drift);
  rep.metrics.emplace_back("final_scale", sf);
  if (s.kind == ScenarioKind::FormationLeaderless) {
    detail::check_upper(rep, "centroid_drift", s.assertions.centroid_drift, drift, "relative to |p(0)|");
    detail::check_upper(rep, "scale_increase", s.assertions.scale_increase, sf - s0, "s(end) - s(0)");
  }
  if (rep.outcome == "rendezvous") {
    rep.metrics.emplace_back("max_bearing_error", std::nan(""));
    if (s.assertions.max_bearing_error) {
      rep.checks.push_back(Check{"max_bearing_error", std::nan(""), *s.assertions.max_bearing_error, true,
                                 "rendezvous: bearings undefined, not checked"});
    }
    return out;
  }
  try {
    const double orientation = rep.outcome == "reflected" ? -1.0 : 1.0;
    const double err = bearing_errors(xf, bearings, orientation).max;
    rep.max_error = err;
    rep.metrics.emplace_back("max_bearing_error", err);
    detail::check_upper(rep, "max_bearing_error", s.assertions.max_bearing_error, err,
                        orientation < 0 ? "reflected formation: measured against -g*" : "");
  } catch (const Error& e) {
    rep.errors.push_back(e.what());
  }
  return out;
}

inline nlohmann::json report_json(const RunReport& rep) {
  nlohmann::json j;
  j["scenario"] = rep.scenario;
  j["kind"] = rep.kind;
  j["digest"] = rep.digest;
  j["dimension"] = rep.dim;
  j["agents"] = rep.agents;
  j["edges"] = rep.edges;
  j["rigidity"] = {{"rank", rep.rank}, {"required_rank", rep.required_rank}, {"rigid", rep.rigid}};
  j["feasible"] = rep.feasible;
  if (rep.predicted) j["predicted"] = detail::to_json(*rep.predicted);
  if (rep.final_state) j["final_state"] = detail::to_json(*rep.final_state);
  if (!rep.outcome.empty()) j["outcome"] = rep.outcome;
  if (!rep.termination.empty()) {
    j["termination"] = rep.termination;
    j["convergence_time"] = rep.convergence_time;
    j["dt"] = rep.dt;
    j["method"] = rep.method;
  }
  if (std::isfinite(rep.max_error)) j["max_error"] = rep.max_error;
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& [k, v] : rep.metrics) metrics[k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
  j["metrics"] = metrics;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : rep.checks) {
    j["checks"].push_back({{"name", c.name},
                           {"value", std::isfinite(c.value) ? nlohmann::json(c.value) : nlohmann::json(nullptr)},
                           {"threshold", c.threshold},
                           {"passed", c.passed},
                           {"note", c.note}});
  }
  j["warnings"] = rep.warnings;
  j["errors"] = rep.errors;
  j["passed"] = rep.passed();
  return j;
}

inline std::string report_text(const RunReport& rep) {
  std::ostringstream os;
  os << std::setprecision(6);
  os << "scenario     " << rep.scenario << " (" << rep.kind << ", digest " << rep.digest << ")\n";
  os << "network      n=" << rep.agents << " m=" << rep.edges << " d=" << rep.dim << "\n";
  os << "rigidity     rank(R_B)=" << rep.rank << " required=" << rep.required_rank
     << (rep.rigid ? " rigid" : " NOT rigid") << "\n";
  if (!rep.outcome.empty()) os << "outcome      " << rep.outcome << "\n";
  if (!rep.termination.empty()) {
    os << "simulation   " << rep.method << " dt=" << rep.dt << " t_end=" << rep.convergence_time << " ("
       << rep.termination << ")\n";
  }
  for (const auto& [k, v] : rep.metrics) os << "  " << std::left << std::setw(30) << k << v << "\n";
  for (const auto& c : rep.checks) {
    os << (c.passed ? "PASS " : "FAIL ") << std::left << std::setw(24) << c.name << " value=" << c.value
       << " threshold=" << c.threshold;
    if (!c.note.empty()) os << "  [" << c.note << "]";
    os << "\n";
  }
  for (const auto& w : rep.warnings) os << "warning: " << w << "\n";
  for (const auto& e : rep.errors) os << "error: " << e << "\n";
  os << (rep.passed() ? "result: PASS" : "result: FAIL") << "\n";
  return os.str();
}

/// One row per recorded sample: time, every coordinate p<i>_<k>, then the
/// observer columns.
inline void write_trajectory_csv(const Trajectory& traj, int dim, std::ostream& os) {
  os << std::setprecision(17);
  os << "time";
  if (!traj.states.empty()) {
    const Index n = traj.states.front().size() / dim;
    for (Index i = 0; i < n; ++i) {
      for (int k = 0; k < dim; ++k) os << ",p" << i << "_" << k;
    }
  }
  for (const auto& c : traj.columns) os << "," << c;
  os << "\n";
  for (std::size_t r = 0; r < traj.times.size(); ++r) {
    os << traj.times[r];
    for (Index i = 0; i < traj.states[r].size(); ++i) os << "," << traj.states[r](i);
    for (double v : traj.samples[r]) os << "," << v;
    os << "\n";
  }
}

/// Writes trajectory.csv and report.json into `dir`.
inline void write_run_outputs(const RunOutput& run, int dim, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / "trajectory.csv");
    write_trajectory_csv(run.trajectory, dim, csv);
  }
  std::ofstream js(dir / "report.json");
  js << report_json(run.report).dump(2) << "\n";
}

}  // namespace bearing
