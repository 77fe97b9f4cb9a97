#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bearing/configuration.hpp"
#include "bearing/error.hpp"
#include "bearing/graph.hpp"
#include "bearing/laplacian.hpp"
#include "bearing/rigidity.hpp"
#include "bearing/scenario.hpp"

namespace bearing {

using EdgeList = std::vector<std::pair<Index, Index>>;

inline Index rigidity_rank(Index n, const EdgeList& edges, const Configuration& config) {
  return bearing_rigidity_matrix(Framework(Graph::build(n, edges), config)).rank;
}

/// Greedily extend `edges` from `candidates` until the framework is
/// infinitesimally bearing rigid. Each round adds the candidate with the
/// largest rank gain; ties go to the earliest candidate. Stops early when
/// no candidate raises the rank.
inline EdgeList augment_until_rigid(const Configuration& config, EdgeList edges, EdgeList candidates) {
  const Index n = config.count();
  const Index target = n * config.dim() - config.dim() - 1;
  Index rank = rigidity_rank(n, edges, config);
  while (rank < target && !candidates.empty()) {
    Index best_gain = 0;
    std::size_t best = 0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      EdgeList trial = edges;
      trial.push_back(candidates[c]);
      const Index gain = rigidity_rank(n, trial, config) - rank;
      if (gain > best_gain) {
        best_gain = gain;
        best = c;
      }
    }
    if (best_gain == 0) break;
    edges.push_back(candidates[best]);
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(best));
    rank += best_gain;
  }
  return edges;
}

/// Unit cube target: vertex v sits at (v & 1, (v >> 1) & 1, (v >> 2) & 1).
inline Configuration unit_cube() {
  std::vector<Eigen::VectorXd> pts;
  for (int v = 0; v < 8; ++v) pts.push_back(Eigen::Vector3d(v & 1, (v >> 1) & 1, (v >> 2) & 1));
  return Configuration::from_points(pts);
}

/// The 12 cube edges followed by augmenting diagonals (face diagonals
/// before space diagonals, each group in lexicographic order) chosen until
/// the framework is rigid.
inline EdgeList cube_edges() {
  EdgeList sides, face, space;
  for (Index i = 0; i < 8; ++i) {
    for (Index j = i + 1; j < 8; ++j) {
      switch (std::popcount(static_cast<unsigned>(i ^ j))) {
        case 1: sides.emplace_back(i, j); break;
        case 2: face.emplace_back(i, j); break;
        default: space.emplace_back(i, j); break;
      }
    }
  }
  EdgeList candidates = face;
  candidates.insert(candidates.end(), space.begin(), space.end());
  EdgeList out = augment_until_rigid(unit_cube(), sides, candidates);
  std::sort(out.begin(), out.end());
  return out;
}

inline BearingConstraintSet graph_bearings(const Graph& g, const Configuration& config) {
  return BearingConstraintSet::from_bearings(g, bearing_function(Framework(g, config)));
}

inline std::vector<ConstraintEntry> constraints_from(const Graph& g, const Configuration& target) {
  const BearingVector bv = bearing_function(Framework(g, target));
  std::vector<ConstraintEntry> out;
  for (Index k = 0; k < g.m(); ++k) {
    out.push_back(ConstraintEntry{g.edge(k).tail, g.edge(k).head, bv.bearing(k)});
  }
  return out;
}

/// Cube formation with 0 (leaderless) or 2 leaders. Leaders are agents 0
/// and 1, held at their target corners.
inline Scenario generate_cube_scenario(int n_leaders = 0, std::uint64_t seed = 1) {
  if (n_leaders != 0 && n_leaders != 2) {
    throw Error(ErrorCode::ValidationError, "cube scenario supports 0 or 2 leaders");
  }
  const Configuration cube = unit_cube();
  Scenario s;
  s.name = n_leaders == 0 ? "cube-leaderless" : "cube-leader-follower";
  s.kind = n_leaders == 0 ? ScenarioKind::FormationLeaderless : ScenarioKind::FormationLeaderFollower;
  s.dim = 3;
  s.agents = 8;
  s.edges = cube_edges();
  s.constraints = constraints_from(s.graph(), cube);
  if (n_leaders == 2) {
    s.leaders = {0, 1};
    s.leader_positions.resize(6);
    s.leader_positions << cube.point(0), cube.point(1);
  }
  s.initial = InitialSpec{true, seed, -1.0, 2.0, {}};
  s.integrator = IntegratorSpec{Method::RK4, std::nullopt, 1000.0, 1e-9, 10};
  s.assertions.max_bearing_error = 1e-6;
  s.assertions.equilibrium_deviation = 1e-6;
  s.assertions.require_convergence = true;
  if (n_leaders == 0) {
    s.assertions.centroid_drift = 1e-10;
    s.assertions.scale_increase = 1e-9;
  }
  validate_scenario(s);
  return s;
}

struct LocalizationParams {
  Index agents = 50;
  int dim = 3;
  Index target_edges = 269;
  Index anchors = 4;
  std::uint64_t seed = 1;
  int max_attempts = 10;
};

/// Random network in the unit box. Vertex pairs are added shortest first
/// until `target_edges` is reached, then further pairs are added until the
/// graph is connected and the network is infinitesimally bearing rigid.
/// A failed attempt redraws the positions from the next seed.
inline Scenario generate_localization_scenario(const LocalizationParams& params = {}) {
  const Index n = params.agents;
  const int d = params.dim;
  if (n < 2 || d < 2) throw Error(ErrorCode::ValidationError, "need agents >= 2 and dimension >= 2");
  if (params.anchors < 2 || params.anchors > n) {
    throw Error(ErrorCode::ValidationError, "need 2 <= anchors <= agents");
  }
  const Index target_rank = n * d - d - 1;
  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    std::mt19937_64 rng(params.seed + static_cast<std::uint64_t>(attempt) * 0x9E3779B97F4A7C15ULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::VectorXd p(n * d);
    for (Index i = 0; i < p.size(); ++i) p(i) = unit(rng);
    const Configuration config(d, p);

    std::vector<std::pair<double, std::pair<Index, Index>>> pairs;
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) pairs.push_back({(config.point(i) - config.point(j)).norm(), {i, j}});
    }
    std::sort(pairs.begin(), pairs.end());

    EdgeList edges;
    std::size_t next = 0;
    const auto quota = std::min<std::size_t>(static_cast<std::size_t>(std::max<Index>(params.target_edges, 1)),
                                             pairs.size());
    for (; next < quota; ++next) edges.push_back(pairs[next].second);
    auto rigid = [&] {
      const Graph g = Graph::build(n, edges);
      return g.is_connected() && bearing_rigidity_matrix(Framework(g, config)).rank == target_rank;
    };
    bool ok = rigid();
    while (!ok && next < pairs.size()) {
      edges.push_back(pairs[next++].second);
      ok = rigid();
    }
    if (!ok) continue;

    std::sort(edges.begin(), edges.end());
    Scenario s;
    s.name = "localization-n" + std::to_string(n) + "-d" + std::to_string(d);
    s.kind = ScenarioKind::Localization;
    s.dim = d;
    s.agents = n;
    s.edges = std::move(edges);
    s.positions = p;
    for (Index a = 0; a < params.anchors; ++a) s.anchors.push_back(a);
    s.initial = InitialSpec{true, params.seed + 1, 0.0, 1.0, {}};
    // The slowest error mode decays like exp(-lambda_min(L_ff) t); the horizon
    // leaves room for a factor e^-20 on it.
    const RolePartition part = partition(assemble_laplacian(graph_bearings(Graph::build(n, s.edges), config)), s.anchors);
    const double lambda_min = is_follower_block_positive_definite(part).lambda_min;
    const double horizon = lambda_min > 0.0 ? std::ceil(20.0 / lambda_min) : 2000.0;
    s.integrator = IntegratorSpec{Method::RK4, std::nullopt, std::max(2000.0, horizon), 1e-10, 50};
    s.assertions.max_localization_error = 1e-6;
    s.assertions.closed_form_error = 1e-8;
    s.assertions.require_convergence = true;
    validate_scenario(s);
    return s;
  }
  throw Error(ErrorCode::GenerationFailure, "no rigid network after " + std::to_string(params.max_attempts) +
                                                " attempts");
}

}  // namespace bearing
