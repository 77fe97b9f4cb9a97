#pragma once

#include <algorithm>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bearing/error.hpp"

namespace bearing {

using Index = Eigen::Index;

/// Directed edge of an oriented graph. For canonically oriented graphs
/// tail < head always holds.
struct Edge {
  Index tail = 0;
  Index head = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct Adjacent {
  Index vertex = 0;
  Index edge = 0;  // index into Graph::edges()
};

/// Undirected simple graph on vertices 0..n-1.
///
/// Edges are kept twice: as a lexicographically sorted list of canonical
/// pairs (tail = min, head = max) used for edge-indexed matrix assembly, and
/// as per-vertex adjacency lists used by the neighbor-local protocols.
/// Instances are immutable once built.
class Graph {
 public:
  Graph() = default;

  static Graph build(Index n, const std::vector<std::pair<Index, Index>>& edge_list) {
    if (n < 2) {
      throw Error(ErrorCode::VertexOutOfRange, "graph needs at least 2 vertices, got " + std::to_string(n));
    }
    Graph g;
    g.n_ = n;
    g.edges_.reserve(edge_list.size());
    for (const auto& [a, b] : edge_list) {
      if (a < 0 || b < 0 || a >= n || b >= n) {
        throw Error(ErrorCode::VertexOutOfRange,
                    "edge (" + std::to_string(a) + "," + std::to_string(b) + ") with n=" + std::to_string(n));
      }
      if (a == b) throw Error(ErrorCode::SelfLoop, "vertex " + std::to_string(a));
      g.edges_.push_back(Edge{std::min(a, b), std::max(a, b)});
    }
    std::sort(g.edges_.begin(), g.edges_.end());
    auto dup = std::adjacent_find(g.edges_.begin(), g.edges_.end());
    if (dup != g.edges_.end()) {
      throw Error(ErrorCode::DuplicateEdge, "{" + std::to_string(dup->tail) + "," + std::to_string(dup->head) + "}");
    }
    g.adjacency_.assign(static_cast<std::size_t>(n), {});
    for (Index k = 0; k < g.m(); ++k) {
      const Edge& e = g.edges_[static_cast<std::size_t>(k)];
      g.adjacency_[static_cast<std::size_t>(e.tail)].push_back({e.head, k});
      g.adjacency_[static_cast<std::size_t>(e.head)].push_back({e.tail, k});
    }
    for (auto& adj : g.adjacency_) {
      std::sort(adj.begin(), adj.end(), [](const Adjacent& x, const Adjacent& y) { return x.vertex < y.vertex; });
    }
    return g;
  }

  Index n() const noexcept { return n_; }
  Index m() const noexcept { return static_cast<Index>(edges_.size()); }

  /// Canonical edges, sorted by (tail, head).
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Edge& edge(Index k) const { return edges_.at(static_cast<std::size_t>(k)); }

  const std::vector<Adjacent>& adjacency(Index i) const {
    check_vertex(i);
    return adjacency_[static_cast<std::size_t>(i)];
  }

  std::set<Index> neighbors(Index i) const {
    std::set<Index> out;
    for (const auto& a : adjacency(i)) out.insert(a.vertex);
    return out;
  }

  Index degree(Index i) const { return static_cast<Index>(adjacency(i).size()); }

  /// Index of the edge {i, j} in edges(), or -1 when absent.
  Index edge_index(Index i, Index j) const {
    check_vertex(i);
    check_vertex(j);
    const Edge key{std::min(i, j), std::max(i, j)};
    auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
    if (it == edges_.end() || *it != key) return -1;
    return static_cast<Index>(it - edges_.begin());
  }

  bool has_edge(Index i, Index j) const { return i != j && edge_index(i, j) >= 0; }

  bool is_connected() const {
    if (n_ == 0) return false;
    std::vector<char> seen(static_cast<std::size_t>(n_), 0);
    std::queue<Index> frontier;
    frontier.push(0);
    seen[0] = 1;
    Index reached = 1;
    while (!frontier.empty()) {
      Index v = frontier.front();
      frontier.pop();
      for (const auto& a : adjacency_[static_cast<std::size_t>(v)]) {
        auto& s = seen[static_cast<std::size_t>(a.vertex)];
        if (!s) {
          s = 1;
          ++reached;
          frontier.push(a.vertex);
        }
      }
    }
    return reached == n_;
  }

  std::vector<std::pair<Index, Index>> edge_list() const {
    std::vector<std::pair<Index, Index>> out;
    out.reserve(edges_.size());
    for (const auto& e : edges_) out.emplace_back(e.tail, e.head);
    return out;
  }

  friend bool operator==(const Graph& a, const Graph& b) { return a.n_ == b.n_ && a.edges_ == b.edges_; }

 private:
  void check_vertex(Index i) const {
    if (i < 0 || i >= n_) {
      throw Error(ErrorCode::VertexOutOfRange, "vertex " + std::to_string(i) + " with n=" + std::to_string(n_));
    }
  }

  Index n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<Adjacent>> adjacency_;
};

/// A graph with one direction assigned per edge. Edge k of the oriented
/// graph is edge k of the base graph.
struct OrientedGraph {
  Graph base;
  std::vector<Edge> orientation;

  Index n() const noexcept { return base.n(); }
  Index m() const noexcept { return base.m(); }
};

/// Canonical orientation: tail is the smaller vertex, edges in
/// lexicographic (tail, head) order.
inline OrientedGraph orient(const Graph& g) { return OrientedGraph{g, g.edges()}; }

/// m x n incidence matrix with -1 at the tail and +1 at the head of each row.
inline Eigen::MatrixXi incidence_matrix(const OrientedGraph& og) {
  Eigen::MatrixXi h = Eigen::MatrixXi::Zero(og.m(), og.n());
  for (Index k = 0; k < og.m(); ++k) {
    const Edge& e = og.orientation[static_cast<std::size_t>(k)];
    h(k, e.tail) = -1;
    h(k, e.head) = 1;
  }
  return h;
}

}  // namespace bearing
