#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "bearing/configuration.hpp"
#include "bearing/error.hpp"
#include "bearing/graph.hpp"
#include "bearing/rigidity.hpp"

namespace bearing {

/// Unit bearing assigned to every edge of a graph, stored per canonical edge
/// (tail < head). Querying the reverse direction returns the negated vector,
/// so g_ij = -g_ji holds by construction.
class BearingConstraintSet {
 public:
  static constexpr double kUnitTolerance = 1e-9;
  static constexpr double kAntisymmetryTolerance = 1e-9;

  BearingConstraintSet() = default;

  BearingConstraintSet(Graph graph, int dim)
      : graph_(std::move(graph)),
        dim_(dim),
        g_(Eigen::VectorXd::Zero(graph_.m() * dim)),
        assigned_(static_cast<std::size_t>(graph_.m()), 0),
        projectors_(static_cast<std::size_t>(graph_.m())) {
    if (dim < 2) throw Error(ErrorCode::DimensionMismatch, "dimension must be >= 2");
  }

  /// Constraint set read off stacked canonical bearings (e.g. measured ones).
  static BearingConstraintSet from_bearings(Graph graph, const BearingVector& bv) {
    if (bv.m() != graph.m()) {
      throw Error(ErrorCode::SizeMismatch, std::to_string(bv.m()) + " bearings for " + std::to_string(graph.m()) +
                                               " edges");
    }
    BearingConstraintSet out(std::move(graph), bv.dim);
    for (Index k = 0; k < out.graph_.m(); ++k) {
      const Edge& e = out.graph_.edge(k);
      out.set(e.tail, e.head, bv.bearing(k));
    }
    return out;
  }

  /// Assign g*_ij. If the edge already has a bearing (from either
  /// direction) the new value must agree with it.
  void set(Index i, Index j, const Eigen::Ref<const Eigen::VectorXd>& g) {
    const Index k = graph_.edge_index(i, j);
    if (k < 0) {
      throw Error(ErrorCode::ValidationError,
                  "bearing given for non-edge (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
    if (g.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "bearing has wrong dimension");
    if (!(std::abs(g.norm() - 1.0) <= kUnitTolerance)) {
      throw Error(ErrorCode::NonUnitBearing, "bearing (" + std::to_string(i) + "," + std::to_string(j) +
                                                 ") has norm " + std::to_string(g.norm()));
    }
    const Eigen::VectorXd canon = (i < j) ? Eigen::VectorXd(g) : Eigen::VectorXd(-g);
    auto slot = g_.segment(k * dim_, dim_);
    if (assigned_[static_cast<std::size_t>(k)]) {
      if ((slot - canon).norm() > kAntisymmetryTolerance) {
        throw Error(ErrorCode::AntisymmetryViolation, "bearings for (" + std::to_string(i) + "," + std::to_string(j) +
                                                          ") and its reverse are not negatives of each other");
      }
      return;
    }
    slot = canon;
    assigned_[static_cast<std::size_t>(k)] = 1;
    projectors_[static_cast<std::size_t>(k)] = project(canon);
  }

  void validate() const {
    for (Index k = 0; k < graph_.m(); ++k) {
      if (!assigned_[static_cast<std::size_t>(k)]) {
        const Edge& e = graph_.edge(k);
        throw Error(ErrorCode::MissingBearing, "edge (" + std::to_string(e.tail) + "," + std::to_string(e.head) + ")");
      }
    }
  }

  bool complete() const { return std::all_of(assigned_.begin(), assigned_.end(), [](char c) { return c != 0; }); }

  const Graph& graph() const noexcept { return graph_; }
  int dim() const noexcept { return dim_; }

  /// Bearing of canonical edge k (tail -> head).
  auto canonical(Index k) const { return g_.segment(k * dim_, dim_); }

  /// g*_ij for an ordered pair.
  Eigen::VectorXd bearing(Index i, Index j) const {
    const Index k = graph_.edge_index(i, j);
    if (k < 0 || !assigned_[static_cast<std::size_t>(k)]) {
      throw Error(ErrorCode::MissingBearing, "(" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
    return i < j ? Eigen::VectorXd(canonical(k)) : Eigen::VectorXd(-canonical(k));
  }

  /// P_{g_k}; identical for both directions of the edge.
  const Eigen::MatrixXd& projector(Index k) const {
    if (!assigned_.at(static_cast<std::size_t>(k))) {
      const Edge& e = graph_.edge(k);
      throw Error(ErrorCode::MissingBearing, "edge (" + std::to_string(e.tail) + "," + std::to_string(e.head) + ")");
    }
    return projectors_[static_cast<std::size_t>(k)];
  }

  /// Stacked canonical bearings with unit placeholder lengths.
  BearingVector as_bearing_vector() const {
    validate();
    return BearingVector{dim_, g_, Eigen::VectorXd::Ones(graph_.m())};
  }

 private:
  Graph graph_;
  int dim_ = 0;
  Eigen::VectorXd g_;
  std::vector<char> assigned_;
  std::vector<Eigen::MatrixXd> projectors_;
};

/// dn x dn matrix-weighted Laplacian with edge weights P_{g_ij}.
struct BearingLaplacian {
  int dim = 0;
  Eigen::MatrixXd matrix;

  Index n() const noexcept { return dim == 0 ? 0 : matrix.rows() / dim; }
};

/// Block assembly: off-diagonal (i,j) = -P_{g_ij}, diagonal (i,i) = sum of
/// P_{g_ij} over neighbors.
inline BearingLaplacian assemble_laplacian(const BearingConstraintSet& constraints) {
  constraints.validate();
  const int d = constraints.dim();
  const Graph& g = constraints.graph();
  BearingLaplacian out{d, Eigen::MatrixXd::Zero(g.n() * d, g.n() * d)};
  for (Index k = 0; k < g.m(); ++k) {
    const Edge& e = g.edge(k);
    const Eigen::MatrixXd& p = constraints.projector(k);
    out.matrix.block(e.tail * d, e.head * d, d, d) = -p;
    out.matrix.block(e.head * d, e.tail * d, d, d) = -p;
    out.matrix.block(e.tail * d, e.tail * d, d, d) += p;
    out.matrix.block(e.head * d, e.head * d, d, d) += p;
  }
  return out;
}

inline BearingLaplacian assemble_laplacian(const Graph& graph, const BearingVector& bearings) {
  return assemble_laplacian(BearingConstraintSet::from_bearings(graph, bearings));
}

/// Same matrix through the factorization (H (x) I_d)^T diag(P_{g_k}) (H (x) I_d).
inline BearingLaplacian assemble_laplacian_factored(const BearingConstraintSet& constraints) {
  constraints.validate();
  const int d = constraints.dim();
  const Graph& g = constraints.graph();
  const Eigen::MatrixXd hbar = lifted_incidence(orient(g), d);
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(g.m() * d, g.m() * d);
  for (Index k = 0; k < g.m(); ++k) weights.block(k * d, k * d, d, d) = constraints.projector(k);
  return BearingLaplacian{d, hbar.transpose() * weights * hbar};
}

/// Laplacian split by a set of special vertices (leaders or anchors) and the
/// remaining followers:
///
///   [ L_ss  L_sf ]
///   [ L_fs  L_ff ]
///
/// where each block collects the d x d blocks of the listed vertices in
/// increasing vertex order.
struct RolePartition {
  int dim = 0;
  Index n = 0;
  std::vector<Index> special;
  std::vector<Index> followers;
  Eigen::MatrixXd ss, sf, fs, ff;
  double laplacian_norm = 0.0;  // spectral norm of the unpartitioned L

  Index n_special() const noexcept { return static_cast<Index>(special.size()); }
  Index n_followers() const noexcept { return static_cast<Index>(followers.size()); }

  /// Rows of a stacked vector belonging to the given vertices.
  Eigen::VectorXd gather(const Eigen::VectorXd& p, const std::vector<Index>& vertices) const {
    Eigen::VectorXd out(static_cast<Index>(vertices.size()) * dim);
    for (std::size_t a = 0; a < vertices.size(); ++a) {
      out.segment(static_cast<Index>(a) * dim, dim) = p.segment(vertices[a] * dim, dim);
    }
    return out;
  }
  Eigen::VectorXd gather_special(const Eigen::VectorXd& p) const { return gather(p, special); }
  Eigen::VectorXd gather_followers(const Eigen::VectorXd& p) const { return gather(p, followers); }

  /// Inverse of gather_special/gather_followers.
  Eigen::VectorXd scatter(const Eigen::VectorXd& p_special, const Eigen::VectorXd& p_followers) const {
    Eigen::VectorXd p(n * dim);
    for (std::size_t a = 0; a < special.size(); ++a) {
      p.segment(special[a] * dim, dim) = p_special.segment(static_cast<Index>(a) * dim, dim);
    }
    for (std::size_t a = 0; a < followers.size(); ++a) {
      p.segment(followers[a] * dim, dim) = p_followers.segment(static_cast<Index>(a) * dim, dim);
    }
    return p;
  }

  /// Reassemble L in the original vertex order.
  Eigen::MatrixXd recompose() const {
    Eigen::MatrixXd l(n * dim, n * dim);
    auto place = [&](const std::vector<Index>& rows, const std::vector<Index>& cols, const Eigen::MatrixXd& blk) {
      for (std::size_t a = 0; a < rows.size(); ++a) {
        for (std::size_t b = 0; b < cols.size(); ++b) {
          l.block(rows[a] * dim, cols[b] * dim, dim, dim) =
              blk.block(static_cast<Index>(a) * dim, static_cast<Index>(b) * dim, dim, dim);
        }
      }
    };
    place(special, special, ss);
    place(special, followers, sf);
    place(followers, special, fs);
    place(followers, followers, ff);
    return l;
  }
};

inline RolePartition partition(const BearingLaplacian& lap, std::vector<Index> special) {
  const Index n = lap.n();
  const int d = lap.dim;
  std::sort(special.begin(), special.end());
  if (std::adjacent_find(special.begin(), special.end()) != special.end()) {
    throw Error(ErrorCode::ValidationError, "special vertex listed twice");
  }
  std::vector<char> is_special(static_cast<std::size_t>(n), 0);
  for (Index v : special) {
    if (v < 0 || v >= n) throw Error(ErrorCode::VertexOutOfRange, "vertex " + std::to_string(v));
    is_special[static_cast<std::size_t>(v)] = 1;
  }
  RolePartition part;
  part.dim = d;
  part.n = n;
  part.special = std::move(special);
  for (Index v = 0; v < n; ++v) {
    if (!is_special[static_cast<std::size_t>(v)]) part.followers.push_back(v);
  }
  auto extract = [&](const std::vector<Index>& rows, const std::vector<Index>& cols) {
    Eigen::MatrixXd blk(static_cast<Index>(rows.size()) * d, static_cast<Index>(cols.size()) * d);
    for (std::size_t a = 0; a < rows.size(); ++a) {
      for (std::size_t b = 0; b < cols.size(); ++b) {
        blk.block(static_cast<Index>(a) * d, static_cast<Index>(b) * d, d, d) =
            lap.matrix.block(rows[a] * d, cols[b] * d, d, d);
      }
    }
    return blk;
  };
  part.ss = extract(part.special, part.special);
  part.sf = extract(part.special, part.followers);
  part.fs = extract(part.followers, part.special);
  part.ff = extract(part.followers, part.followers);
  part.laplacian_norm = lap.matrix.size() == 0
                            ? 0.0
                            : Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(lap.matrix, Eigen::EigenvaluesOnly)
                                  .eigenvalues()
                                  .cwiseAbs()
                                  .maxCoeff();
  return part;
}

struct DefinitenessReport {
  bool positive_definite = false;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

/// L_ff is declared positive definite when lambda_min > rtol * lambda_max.
inline DefinitenessReport is_follower_block_positive_definite(const RolePartition& part, double rtol = 1e-10) {
  if (part.followers.empty()) throw Error(ErrorCode::EmptyFollowerSet, "every vertex is a leader/anchor");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(part.ff, Eigen::EigenvaluesOnly);
  DefinitenessReport rep;
  rep.lambda_min = eig.eigenvalues().minCoeff();
  rep.lambda_max = eig.eigenvalues().maxCoeff();
  rep.positive_definite = rep.lambda_max > 0.0 && rep.lambda_min > rtol * rep.lambda_max;
  return rep;
}

/// Cholesky factor of L_ff after confirming it is positive definite.
inline Eigen::LLT<Eigen::MatrixXd> factor_follower_block(const RolePartition& part) {
  const DefinitenessReport pd = is_follower_block_positive_definite(part);
  if (!pd.positive_definite) {
    throw Error(ErrorCode::SingularFollowerBlock,
                "L_ff is not positive definite (lambda_min=" + std::to_string(pd.lambda_min) + ")");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(part.ff);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularFollowerBlock, "Cholesky factorization failed");
  return llt;
}

struct LeaderFeasibility {
  double residual = 0.0;   // |(L_ss - L_sf L_ff^{-1} L_fs) p_s|
  double tolerance = 0.0;  // rtol * |L| * |p_s|
  bool feasible = false;   // necessary condition only
};

inline LeaderFeasibility check_leader_feasibility(const RolePartition& part, const Eigen::VectorXd& p_special,
                                                  double rtol = 1e-8) {
  if (p_special.size() != part.n_special() * part.dim) {
    throw Error(ErrorCode::SizeMismatch, "leader positions have wrong length");
  }
  if (part.followers.empty()) {
    // No followers to solve for: the condition reduces to L p = 0.
    LeaderFeasibility out;
    out.residual = (part.ss * p_special).norm();
    out.tolerance = rtol * part.laplacian_norm * p_special.norm();
    out.feasible = out.residual <= out.tolerance;
    return out;
  }
  const auto llt = factor_follower_block(part);
  const Eigen::VectorXd schur = part.ss * p_special - part.sf * llt.solve(part.fs * p_special);
  LeaderFeasibility out;
  out.residual = schur.norm();
  out.tolerance = rtol * part.laplacian_norm * p_special.norm();
  out.feasible = out.residual <= out.tolerance;
  return out;
}

struct ConstraintFeasibility {
  bool feasible = false;
  /// dim Null(L) == d + 1: the satisfying formation is unique up to
  /// translation and scaling.
  bool unique_shape = false;
  Index nullity = 0;
  Index laplacian_rank = 0;
  /// Centered, unit-norm configuration whose bearings equal +g* on every
  /// edge. Empty when infeasible.
  Eigen::VectorXd representative;
  std::string reason;
};

namespace detail {

/// Find c with A c > 0 componentwise. Least squares against the all-ones
/// target first, then a bounded perceptron on the normalized rows.
inline std::optional<Eigen::VectorXd> positive_combination(const Eigen::MatrixXd& a) {
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(a.rows());
  Eigen::VectorXd c = a.colPivHouseholderQr().solve(ones);
  auto margin_ok = [&](const Eigen::VectorXd& x) {
    const Eigen::VectorXd v = a * x;
    return v.minCoeff() > 1e-9 * v.cwiseAbs().maxCoeff();
  };
  if (margin_ok(c)) return c;

  Eigen::MatrixXd rows = a;
  for (Index k = 0; k < rows.rows(); ++k) rows.row(k).normalize();
  c = rows.colwise().sum().transpose();
  const Index max_updates = 200000;
  for (Index it = 0; it < max_updates; ++it) {
    const Eigen::VectorXd v = rows * c;
    Index worst = 0;
    const double lo = v.minCoeff(&worst);
    if (lo > 1e-9 * v.cwiseAbs().maxCoeff()) return c;
    c += rows.row(worst).transpose();
  }
  return std::nullopt;
}

}  // namespace detail

/// Decide whether a bearing constraint set is realized by some formation by
/// searching the null space of L(G, g*) for a configuration whose edge
/// vectors point along +g* on every edge.
inline ConstraintFeasibility check_constraint_feasibility(const BearingConstraintSet& constraints,
                                                          const NumericOptions& opts = {}) {
  const Graph& g = constraints.graph();
  if (!g.is_connected()) throw Error(ErrorCode::DisconnectedGraph, "constraint graph is not connected");
  const int d = constraints.dim();
  const Index n = g.n();
  const BearingLaplacian lap = assemble_laplacian(constraints);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap.matrix);
  const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
  const Index rank = numeric_rank(lambda, lap.matrix.rows(), lap.matrix.cols(), opts.rank_rtol);
  ConstraintFeasibility out;
  out.laplacian_rank = rank;
  out.nullity = n * d - rank;
  // Eigenvalues are ascending, so the null space is the leading columns.
  const Eigen::MatrixXd null_basis = eig.eigenvectors().leftCols(out.nullity);
  const Eigen::MatrixXd trans = translation_directions(n, d) / std::sqrt(static_cast<double>(n));
  const Eigen::MatrixXd shape_part = null_basis - trans * (trans.transpose() * null_basis);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(shape_part, Eigen::ComputeThinU);
  const Index q = static_cast<Index>((svd.singularValues().array() > 0.5).count());
  if (q == 0) {
    out.reason = "null space of L contains only translations; every satisfying formation collapses to a point";
    return out;
  }
  const Eigen::MatrixXd shapes = svd.matrixU().leftCols(q);

  // Signed edge length along g*_k for each shape basis vector.
  Eigen::MatrixXd along(g.m(), q);
  for (Index k = 0; k < g.m(); ++k) {
    const Edge& e = g.edge(k);
    const Eigen::MatrixXd ek = shapes.middleRows(e.head * d, d) - shapes.middleRows(e.tail * d, d);
    along.row(k) = constraints.canonical(k).transpose() * ek;
  }
  const double scale = along.cwiseAbs().maxCoeff();
  for (Index k = 0; k < g.m(); ++k) {
    if (!(along.row(k).norm() > 1e-9 * scale)) {
      const Edge& e = g.edge(k);
      out.reason = "edge (" + std::to_string(e.tail) + "," + std::to_string(e.head) +
                   ") has zero length in every configuration satisfying the constraints";
      return out;
    }
  }
  const auto coeffs = detail::positive_combination(along);
  if (!coeffs) {
    out.reason = "no configuration in Null(L) has every edge aligned with +g*";
    return out;
  }
  Eigen::VectorXd r = centered(shapes * *coeffs, d);
  r.normalize();

  // Confirm the reconstruction edge by edge.
  const double eps_len = opts.length_rtol * diameter(Configuration(d, r));
  for (Index k = 0; k < g.m(); ++k) {
    const Edge& e = g.edge(k);
    const Eigen::VectorXd ek = r.segment(e.head * d, d) - r.segment(e.tail * d, d);
    const double len = ek.norm();
    if (!(len > eps_len) || (ek / len - constraints.canonical(k)).norm() > 1e-6) {
      out.reason = "reconstructed formation violates the bearing on edge (" + std::to_string(e.tail) + "," +
                   std::to_string(e.head) + ")";
      return out;
    }
  }
  out.feasible = true;
  out.unique_shape = q == 1;
  out.representative = std::move(r);
  return out;
}

}  // namespace bearing
