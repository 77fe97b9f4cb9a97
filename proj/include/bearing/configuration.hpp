#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bearing/error.hpp"
#include "bearing/graph.hpp"

namespace bearing {

/// n points in R^d stored stacked as p = [p_0; p_1; ...; p_{n-1}].
class Configuration {
 public:
  Configuration() = default;

  Configuration(int dim, Eigen::VectorXd stacked) : dim_(dim), p_(std::move(stacked)) {
    if (dim_ < 2) throw Error(ErrorCode::DimensionMismatch, "dimension must be >= 2, got " + std::to_string(dim_));
    if (p_.size() % dim_ != 0) {
      throw Error(ErrorCode::DimensionMismatch,
                  "stacked length " + std::to_string(p_.size()) + " not a multiple of d=" + std::to_string(dim_));
    }
    if (count() < 2) throw Error(ErrorCode::DimensionMismatch, "configuration needs at least 2 points");
  }

  static Configuration from_points(const std::vector<Eigen::VectorXd>& points) {
    if (points.empty()) throw Error(ErrorCode::DimensionMismatch, "no points");
    const auto d = points.front().size();
    Eigen::VectorXd p(d * static_cast<Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points[i].size() != d) throw Error(ErrorCode::DimensionMismatch, "points have mixed dimensions");
      p.segment(static_cast<Index>(i) * d, d) = points[i];
    }
    return Configuration(static_cast<int>(d), std::move(p));
  }

  int dim() const noexcept { return dim_; }
  Index count() const noexcept { return dim_ == 0 ? 0 : p_.size() / dim_; }
  const Eigen::VectorXd& stacked() const noexcept { return p_; }

  auto point(Index i) const { return p_.segment(i * dim_, dim_); }

  friend bool operator==(const Configuration& a, const Configuration& b) {
    return a.dim_ == b.dim_ && a.p_.size() == b.p_.size() && a.p_ == b.p_;
  }

 private:
  int dim_ = 0;
  Eigen::VectorXd p_;
};

/// Columns of 1 (x) I_d: the d rigid translation directions of a stacked
/// configuration with n points.
inline Eigen::MatrixXd translation_directions(Index n, int d) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n * d, d);
  for (Index i = 0; i < n; ++i) t.block(i * d, 0, d, d).setIdentity();
  return t;
}

/// Blockwise mean of a stacked vector.
inline Eigen::VectorXd centroid(const Eigen::VectorXd& p, int d) {
  const Index n = p.size() / d;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
  for (Index i = 0; i < n; ++i) c += p.segment(i * d, d);
  return c / static_cast<double>(n);
}

/// p - 1 (x) c(p).
inline Eigen::VectorXd centered(const Eigen::VectorXd& p, int d) {
  const Eigen::VectorXd c = centroid(p, d);
  Eigen::VectorXd r = p;
  for (Index i = 0; i < p.size() / d; ++i) r.segment(i * d, d) -= c;
  return r;
}

inline double diameter(const Configuration& config) {
  double best = 0.0;
  for (Index i = 0; i < config.count(); ++i) {
    for (Index j = i + 1; j < config.count(); ++j) {
      best = std::max(best, (config.point(i) - config.point(j)).norm());
    }
  }
  return best;
}

/// Undirected graph embedded at a configuration.
struct Framework {
  Graph graph;
  Configuration config;

  Framework() = default;
  Framework(Graph g, Configuration c) : graph(std::move(g)), config(std::move(c)) {
    if (graph.n() != config.count()) {
      throw Error(ErrorCode::SizeMismatch, "graph has " + std::to_string(graph.n()) + " vertices, configuration has " +
                                               std::to_string(config.count()) + " points");
    }
  }

  int dim() const noexcept { return config.dim(); }
  Index n() const noexcept { return graph.n(); }
  Index m() const noexcept { return graph.m(); }
};

}  // namespace bearing
