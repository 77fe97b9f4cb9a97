#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "bearing/configuration.hpp"
#include "bearing/error.hpp"
#include "bearing/graph.hpp"

namespace bearing {

struct NumericOptions {
  /// Singular values below rank_rtol * sigma_max count as zero. A floor of
  /// max(rows, cols) * sigma_max * machine epsilon always applies.
  double rank_rtol = 1e-8;
  /// Edges shorter than length_rtol * diameter have no defined bearing.
  double length_rtol = 1e-12;
};

/// Orthogonal projector onto the complement of x: I - x x^T / |x|^2.
inline Eigen::MatrixXd project(const Eigen::Ref<const Eigen::VectorXd>& x, double min_norm = 0.0) {
  const double len = x.norm();
  if (!(len > min_norm) || !std::isfinite(len)) {
    throw Error(ErrorCode::DegenerateVector, "cannot project onto the complement of a vector with norm " +
                                                 std::to_string(len));
  }
  const Eigen::VectorXd u = x / len;
  Eigen::MatrixXd p = -u * u.transpose();
  p.diagonal().array() += 1.0;
  return p;
}

/// H (x) I_d, the incidence matrix lifted to stacked coordinates.
inline Eigen::MatrixXd lifted_incidence(const OrientedGraph& og, int d) {
  const Eigen::MatrixXi h = incidence_matrix(og);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(h.rows() * d, h.cols() * d);
  for (Index k = 0; k < h.rows(); ++k) {
    for (Index i = 0; i < h.cols(); ++i) {
      if (h(k, i) != 0) out.block(k * d, i * d, d, d).diagonal().setConstant(static_cast<double>(h(k, i)));
    }
  }
  return out;
}

/// Stacked unit bearings g_k = e_k / |e_k| in canonical edge order.
struct BearingVector {
  int dim = 0;
  Eigen::VectorXd g;        // dm
  Eigen::VectorXd lengths;  // m

  Index m() const noexcept { return lengths.size(); }
  auto bearing(Index k) const { return g.segment(k * dim, dim); }
};

inline BearingVector bearing_function(const Framework& fw, const NumericOptions& opts = {}) {
  const int d = fw.dim();
  const double eps_len = opts.length_rtol * diameter(fw.config);
  BearingVector out;
  out.dim = d;
  out.g.resize(fw.m() * d);
  out.lengths.resize(fw.m());
  for (Index k = 0; k < fw.m(); ++k) {
    const Edge& e = fw.graph.edge(k);
    const Eigen::VectorXd ek = fw.config.point(e.head) - fw.config.point(e.tail);
    const double len = ek.norm();
    if (!(len > eps_len)) {
      throw Error(ErrorCode::CoincidentPoints, "edge " + std::to_string(k) + " (" + std::to_string(e.tail) + "," +
                                                   std::to_string(e.head) + ") has length " + std::to_string(len));
    }
    out.lengths(k) = len;
    out.g.segment(k * d, d) = ek / len;
  }
  return out;
}

inline double rank_threshold(const Eigen::VectorXd& singular_values, Index rows, Index cols, double rtol) {
  if (singular_values.size() == 0) return 0.0;
  const double smax = singular_values.maxCoeff();
  const double floor = static_cast<double>(std::max(rows, cols)) * smax * std::numeric_limits<double>::epsilon();
  return std::max(rtol * smax, floor);
}

inline Index numeric_rank(const Eigen::VectorXd& singular_values, Index rows, Index cols, double rtol) {
  const double tau = rank_threshold(singular_values, rows, cols, rtol);
  return static_cast<Index>((singular_values.array() > tau).count());
}

struct BearingRigidityMatrix {
  Eigen::MatrixXd matrix;           // dm x dn
  Eigen::VectorXd singular_values;  // descending
  Index rank = 0;
  Eigen::MatrixXd null_space;       // dn x (dn - rank), orthonormal columns
};

/// diag(P_{g_k} / |e_k|) (H (x) I_d), assembled block by block.
inline Eigen::MatrixXd rigidity_matrix_blocks(const Framework& fw, const BearingVector& bv) {
  const int d = fw.dim();
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(fw.m() * d, fw.n() * d);
  for (Index k = 0; k < fw.m(); ++k) {
    const Edge& e = fw.graph.edge(k);
    const Eigen::MatrixXd block = project(bv.bearing(k)) / bv.lengths(k);
    r.block(k * d, e.tail * d, d, d) = -block;
    r.block(k * d, e.head * d, d, d) = block;
  }
  return r;
}

inline BearingRigidityMatrix bearing_rigidity_matrix(const Framework& fw, const NumericOptions& opts = {}) {
  const BearingVector bv = bearing_function(fw, opts);
  BearingRigidityMatrix out;
  out.matrix = rigidity_matrix_blocks(fw, bv);
  const Index cols = out.matrix.cols();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(out.matrix, Eigen::ComputeFullV);
  // Pad with zeros when dm < dn so that every column has a singular value.
  out.singular_values = Eigen::VectorXd::Zero(cols);
  out.singular_values.head(svd.singularValues().size()) = svd.singularValues();
  out.rank = numeric_rank(out.singular_values, out.matrix.rows(), cols, opts.rank_rtol);
  out.null_space = svd.matrixV().rightCols(cols - out.rank);
  return out;
}

/// Orthonormal basis of span{1 (x) I_d, p}: the d unit translations
/// followed by the centered configuration r(p) / |r(p)|.
inline Eigen::MatrixXd trivial_motion_basis(const Configuration& config) {
  const int d = config.dim();
  const Index n = config.count();
  const Eigen::VectorXd r = centered(config.stacked(), d);
  const double s = r.norm();
  if (!(s > 1e-12 * std::max(1.0, config.stacked().norm()))) {
    throw Error(ErrorCode::DegenerateConfiguration, "all points coincide; scaling direction undefined");
  }
  Eigen::MatrixXd basis(n * d, d + 1);
  basis.leftCols(d) = translation_directions(n, d) / std::sqrt(static_cast<double>(n));
  basis.col(d) = r / s;
  return basis;
}

struct RigidityReport {
  bool rigid = false;
  Index rank = 0;
  Index required_rank = 0;  // dn - d - 1
  Eigen::VectorXd singular_values;
  /// Orthonormal basis of the part of Null(R_B) orthogonal to the trivial
  /// motions. Empty (zero columns) when the framework is rigid.
  Eigen::MatrixXd nontrivial_motions;
};

inline RigidityReport is_infinitesimally_bearing_rigid(const Framework& fw, const NumericOptions& opts = {}) {
  const BearingRigidityMatrix rb = bearing_rigidity_matrix(fw, opts);
  const int d = fw.dim();
  RigidityReport rep;
  rep.rank = rb.rank;
  rep.required_rank = fw.n() * d - d - 1;
  rep.rigid = rb.rank == rep.required_rank;
  rep.singular_values = rb.singular_values;

  const Eigen::MatrixXd trivial = trivial_motion_basis(fw.config);
  const Eigen::MatrixXd residual = rb.null_space - trivial * (trivial.transpose() * rb.null_space);
  if (residual.cols() == 0) {
    rep.nontrivial_motions.resize(fw.n() * d, 0);
    return rep;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual, Eigen::ComputeThinU);
  const Index k = static_cast<Index>((svd.singularValues().array() > 1e-6).count());
  rep.nontrivial_motions = svd.matrixU().leftCols(k);
  return rep;
}

}  // namespace bearing
