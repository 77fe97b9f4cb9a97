#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bearing/configuration.hpp"
#include "bearing/error.hpp"
#include "bearing/laplacian.hpp"
#include "bearing/rigidity.hpp"

namespace bearing {

namespace detail {

inline void check_state(const BearingConstraintSet& bearings, const Eigen::VectorXd& x) {
  if (x.size() != bearings.graph().n() * bearings.dim()) {
    throw Error(ErrorCode::SizeMismatch, "state has length " + std::to_string(x.size()) + ", expected " +
                                             std::to_string(bearings.graph().n() * bearings.dim()));
  }
}

inline std::vector<char> role_mask(Index n, const std::vector<Index>& fixed) {
  std::vector<char> mask(static_cast<std::size_t>(n), 0);
  for (Index v : fixed) {
    if (v < 0 || v >= n) throw Error(ErrorCode::VertexOutOfRange, "vertex " + std::to_string(v));
    mask[static_cast<std::size_t>(v)] = 1;
  }
  return mask;
}

/// u_i = -sum_{j in N_i} P_{g_ij} (x_i - x_j) for every vertex not marked
/// fixed; fixed vertices get u_i = 0. Both protocols evaluate exactly this.
inline Eigen::VectorXd projected_consensus(const BearingConstraintSet& bearings, const Eigen::VectorXd& x,
                                           const std::vector<char>& fixed) {
  bearings.validate();
  check_state(bearings, x);
  const int d = bearings.dim();
  const Graph& g = bearings.graph();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(x.size());
  for (Index i = 0; i < g.n(); ++i) {
    if (fixed[static_cast<std::size_t>(i)]) continue;
    auto ui = u.segment(i * d, d);
    for (const Adjacent& a : g.adjacency(i)) {
      ui.noalias() -= bearings.projector(a.edge) * (x.segment(i * d, d) - x.segment(a.vertex * d, d));
    }
  }
  return u;
}

}  // namespace detail

/// Leaderless bearing formation controller, evaluated per agent from
/// relative positions.
inline Eigen::VectorXd leaderless_field(const BearingConstraintSet& constraints, const Eigen::VectorXd& p) {
  return detail::projected_consensus(constraints, p, std::vector<char>(static_cast<std::size_t>(constraints.graph().n()), 0));
}

/// Leader-follower controller: leaders are stationary, followers run the
/// leaderless law.
inline Eigen::VectorXd leader_follower_field(const BearingConstraintSet& constraints, const Eigen::VectorXd& p,
                                             const std::vector<Index>& leaders) {
  return detail::projected_consensus(constraints, p, detail::role_mask(constraints.graph().n(), leaders));
}

enum class FormationOutcome {
  Target,      // converged formation carries the target bearings
  Reflected,   // every bearing is the negated target bearing
  Rendezvous,  // all agents meet at the centroid
};

constexpr std::string_view to_string(FormationOutcome o) {
  switch (o) {
    case FormationOutcome::Target: return "target";
    case FormationOutcome::Reflected: return "reflected";
    case FormationOutcome::Rendezvous: return "rendezvous";
  }
  return "unknown";
}

struct LeaderlessPrediction {
  Eigen::VectorXd final_state;  // p(inf)
  Eigen::VectorXd centroid;     // c(inf) = c(0)
  double scale = 0.0;           // s(inf) = |r*^T p(0)| / |r*|
  double alignment = 0.0;       // r*^T p(0) / |r*|, signed
  FormationOutcome outcome = FormationOutcome::Target;
};

/// Closed-form limit of the leaderless flow: the orthogonal projection of
/// p(0) onto span{1 (x) I_d, r*}. `target` may be any configuration that
/// satisfies the constraints; it is centered before use.
inline LeaderlessPrediction predict_leaderless_equilibrium(const Eigen::VectorXd& p0, const Eigen::VectorXd& target,
                                                           int d) {
  if (p0.size() != target.size() || p0.size() % d != 0) {
    throw Error(ErrorCode::SizeMismatch, "initial state and target differ in length");
  }
  const Eigen::VectorXd r_star = centered(target, d);
  const double norm = r_star.norm();
  if (!(norm > 0.0)) throw Error(ErrorCode::DegenerateTarget, "target formation has zero scale");
  const Eigen::VectorXd dir = r_star / norm;

  LeaderlessPrediction out;
  out.centroid = centroid(p0, d);
  out.alignment = dir.dot(p0);
  out.scale = std::abs(out.alignment);
  out.final_state = out.alignment * dir;
  for (Index i = 0; i < p0.size() / d; ++i) out.final_state.segment(i * d, d) += out.centroid;

  const double r0 = centered(p0, d).norm();
  if (out.scale <= 1e-12 * r0 || r0 == 0.0) {
    out.outcome = FormationOutcome::Rendezvous;
  } else {
    out.outcome = out.alignment > 0.0 ? FormationOutcome::Target : FormationOutcome::Reflected;
  }
  return out;
}

struct LeaderFollowerPrediction {
  Eigen::VectorXd followers;    // p_f(inf) = -L_ff^{-1} L_fl p_l
  Eigen::VectorXd final_state;  // leaders and followers in vertex order
  LeaderFeasibility feasibility;
  /// Set when the leader positions fail the necessary feasibility test;
  /// the equilibrium is still well defined but will not satisfy every bearing.
  bool infeasible_leaders = false;
};

inline LeaderFollowerPrediction predict_leader_follower_equilibrium(const RolePartition& part,
                                                                    const Eigen::VectorXd& p_leaders) {
  if (p_leaders.size() != part.n_special() * part.dim) {
    throw Error(ErrorCode::SizeMismatch, "leader positions have wrong length");
  }
  if (part.followers.empty()) throw Error(ErrorCode::EmptyFollowerSet, "every agent is a leader");
  const auto llt = factor_follower_block(part);
  LeaderFollowerPrediction out;
  out.followers = -llt.solve(part.fs * p_leaders);
  out.final_state = part.scatter(p_leaders, out.followers);
  out.feasibility = check_leader_feasibility(part, p_leaders);
  out.infeasible_leaders = !out.feasibility.feasible;
  return out;
}

struct FormationObservables {
  Eigen::VectorXd centroid;
  Eigen::VectorXd centered;
  double scale = 0.0;
  std::optional<double> alignment;  // r*^T p / |r*| when a target is given
};

inline FormationObservables observables(const Eigen::VectorXd& p, int d,
                                        const std::optional<Eigen::VectorXd>& target = std::nullopt) {
  FormationObservables out;
  out.centroid = centroid(p, d);
  out.centered = centered(p, d);
  out.scale = out.centered.norm();
  if (target) {
    const Eigen::VectorXd r_star = centered(*target, d);
    out.alignment = r_star.dot(p) / r_star.norm();
  }
  return out;
}

struct BearingErrors {
  std::vector<double> per_edge;  // |g_ij(p) - sign * g*_ij| in canonical edge order
  double max = 0.0;
};

/// Distance of the current bearings from the constraints. With
/// orientation = -1 the errors are measured against the reflected bearings.
inline BearingErrors bearing_errors(const Eigen::VectorXd& p, const BearingConstraintSet& constraints,
                                    double orientation = 1.0, const NumericOptions& opts = {}) {
  detail::check_state(constraints, p);
  const Framework fw(constraints.graph(), Configuration(constraints.dim(), p));
  const BearingVector bv = bearing_function(fw, opts);
  BearingErrors out;
  out.per_edge.resize(static_cast<std::size_t>(bv.m()));
  for (Index k = 0; k < bv.m(); ++k) {
    const double err = (bv.bearing(k) - orientation * constraints.canonical(k)).norm();
    out.per_edge[static_cast<std::size_t>(k)] = err;
    out.max = std::max(out.max, err);
  }
  return out;
}

/// Formation control task: constraints on a graph, optional stationary
/// leaders, and the initial configuration.
struct FormationProblem {
  BearingConstraintSet constraints;
  std::vector<Index> leaders;
  Eigen::VectorXd leader_positions;  // stacked in the order of `leaders`
  Eigen::VectorXd initial;           // full dn; leader entries are overwritten

  int dim() const { return constraints.dim(); }

  Eigen::VectorXd initial_state() const {
    Eigen::VectorXd p = initial;
    const int d = dim();
    for (std::size_t a = 0; a < leaders.size(); ++a) {
      p.segment(leaders[a] * d, d) = leader_positions.segment(static_cast<Index>(a) * d, d);
    }
    return p;
  }
};

struct FormationAnalysis {
  ConstraintFeasibility feasibility;
  std::optional<RigidityReport> rigidity;          // evaluated at the recovered representative
  std::optional<DefinitenessReport> definiteness;  // leader-follower only
  std::optional<LeaderFeasibility> leader_check;   // n_l >= 2 only
};

/// Pre-run checks for a formation problem. The rigidity assumption is
/// checked at the single representative recovered from the constraints;
/// satisfying formations share its shape when it is rigid.
inline FormationAnalysis analyze_formation(const FormationProblem& problem, const NumericOptions& opts = {}) {
  FormationAnalysis out;
  out.feasibility = check_constraint_feasibility(problem.constraints, opts);
  if (out.feasibility.feasible) {
    const Framework fw(problem.constraints.graph(), Configuration(problem.dim(), out.feasibility.representative));
    out.rigidity = is_infinitesimally_bearing_rigid(fw, opts);
  }
  if (!problem.leaders.empty() && static_cast<Index>(problem.leaders.size()) < problem.constraints.graph().n()) {
    const RolePartition part = partition(assemble_laplacian(problem.constraints), problem.leaders);
    out.definiteness = is_follower_block_positive_definite(part);
    if (out.definiteness->positive_definite) {
      out.leader_check = check_leader_feasibility(part, problem.leader_positions);
    }
  }
  return out;
}

}  // namespace bearing
