#pragma once

#include "arbor/dense_matrix.hpp"
#include "arbor/scalar.hpp"

#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace arbor {

using VertexId = std::uint32_t;

template <Scalar S>
struct BasicEdge {
  VertexId i = 0;
  VertexId j = 0;
  S beta{0};
  /// Number of parallel lattice bonds merged into this edge (small tori).
  int multiplicity = 1;

  bool operator==(const BasicEdge&) const = default;
};

struct TorusInfo {
  int side = 0;
  int dim = 0;
};

/// Undirected edge-weighted graph with vertex weights h_i. Edges are stored
/// with i < j, sorted lexicographically; the position in that order is the
/// edge index used by every enumeration and sampler.
template <Scalar S>
class BasicGraph {
 public:
  using Edge = BasicEdge<S>;

  BasicGraph() = default;

  BasicGraph(std::size_t n_vertices, std::vector<Edge> edges, std::vector<S> vertex_weights = {},
             std::optional<TorusInfo> torus = std::nullopt)
      : n_(n_vertices), edges_(std::move(edges)), h_(std::move(vertex_weights)), torus_(torus) {
    if (h_.empty()) h_.assign(n_, S(0));
    if (h_.size() != n_) throw std::invalid_argument("graph: vertex weight count does not match vertex count");
    for (auto& e : edges_) {
      if (e.i == e.j) throw std::invalid_argument("graph: self-loop at vertex " + std::to_string(e.i));
      if (e.i >= n_ || e.j >= n_) throw std::invalid_argument("graph: edge endpoint out of range");
      if (e.beta < 0) throw std::invalid_argument("graph: negative edge weight");
      if (e.i > e.j) std::swap(e.i, e.j);
    }
    for (const auto& h : h_)
      if (h < 0) throw std::invalid_argument("graph: negative vertex weight");
    std::sort(edges_.begin(), edges_.end(),
              [](const Edge& a, const Edge& b) { return std::pair(a.i, a.j) < std::pair(b.i, b.j); });
    for (std::size_t k = 1; k < edges_.size(); ++k)
      if (edges_[k].i == edges_[k - 1].i && edges_[k].j == edges_[k - 1].j)
        throw std::invalid_argument("graph: duplicate edge " + std::to_string(edges_[k].i) + "-" +
                                    std::to_string(edges_[k].j));
    adjacency_.assign(n_, {});
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      adjacency_[edges_[k].i].push_back(static_cast<std::uint32_t>(k));
      adjacency_[edges_[k].j].push_back(static_cast<std::uint32_t>(k));
    }
  }

  std::size_t n_vertices() const { return n_; }
  std::size_t n_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(std::size_t k) const { return edges_.at(k); }
  const std::vector<S>& vertex_weights() const { return h_; }
  const std::optional<TorusInfo>& torus() const { return torus_; }
  /// Indices of edges incident to v.
  const std::vector<std::uint32_t>& incident(VertexId v) const { return adjacency_.at(v); }

  std::optional<std::size_t> edge_index(VertexId a, VertexId b) const {
    if (a > b) std::swap(a, b);
    auto it = std::lower_bound(edges_.begin(), edges_.end(), std::pair(a, b),
                               [](const Edge& e, const std::pair<VertexId, VertexId>& key) {
                                 return std::pair(e.i, e.j) < key;
                               });
    if (it == edges_.end() || it->i != a || it->j != b) return std::nullopt;
    return static_cast<std::size_t>(it - edges_.begin());
  }

  /// Connectivity of the graph induced by edges with beta > 0.
  bool is_connected() const {
    if (n_ <= 1) return true;
    std::vector<char> seen(n_, 0);
    std::vector<VertexId> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      VertexId v = stack.back();
      stack.pop_back();
      for (auto k : adjacency_[v]) {
        const auto& e = edges_[k];
        if (e.beta == 0) continue;
        VertexId w = e.i == v ? e.j : e.i;
        if (!seen[w]) {
          seen[w] = 1;
          ++count;
          stack.push_back(w);
        }
      }
    }
    return count == n_;
  }

  BasicGraph with_vertex_weights(std::vector<S> h) const { return BasicGraph(n_, edges_, std::move(h), torus_); }

  bool operator==(const BasicGraph& o) const {
    return n_ == o.n_ && edges_ == o.edges_ && h_ == o.h_;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<S> h_;
  std::optional<TorusInfo> torus_;
  std::vector<std::vector<std::uint32_t>> adjacency_;
};

using WeightedGraph = BasicGraph<double>;
using RationalGraph = BasicGraph<Rational>;

template <Scalar To, Scalar From>
BasicGraph<To> convert_graph(const BasicGraph<From>& g) {
  std::vector<BasicEdge<To>> edges;
  edges.reserve(g.n_edges());
  for (const auto& e : g.edges()) edges.push_back({e.i, e.j, To(e.beta), e.multiplicity});
  std::vector<To> h;
  for (const auto& x : g.vertex_weights()) h.push_back(To(x));
  return BasicGraph<To>(g.n_vertices(), std::move(edges), std::move(h), g.torus());
}

/// Complete graph K_N with beta_ij = alpha / N and h = 0.
template <Scalar S = double>
BasicGraph<S> build_complete(std::size_t n, S alpha) {
  if (n < 2) throw std::invalid_argument("build_complete: need N >= 2");
  if (!(alpha > 0)) throw std::invalid_argument("build_complete: need alpha > 0");
  S beta = alpha / S(static_cast<long>(n));
  std::vector<BasicEdge<S>> edges;
  for (VertexId i = 0; i < n; ++i)
    for (VertexId j = i + 1; j < n; ++j) edges.push_back({i, j, beta, 1});
  return BasicGraph<S>(n, std::move(edges));
}

/// Vertex id of torus coordinates x (x_0 fastest).
inline VertexId torus_vertex(std::span<const int> x, int side) {
  VertexId v = 0;
  for (std::size_t k = x.size(); k-- > 0;) v = v * side + static_cast<VertexId>(((x[k] % side) + side) % side);
  return v;
}

inline std::vector<int> torus_coords(VertexId v, int side, int dim) {
  std::vector<int> x(dim);
  for (int k = 0; k < dim; ++k) {
    x[k] = static_cast<int>(v % side);
    v /= side;
  }
  return x;
}

/// Periodic nearest-neighbour lattice of side L in d dimensions. For L = 2
/// both bonds between a pair coincide and are merged into one edge of
/// weight 2*beta with multiplicity 2.
template <Scalar S = double>
BasicGraph<S> build_torus(int side, int dim, S beta) {
  if (side < 2) throw std::invalid_argument("build_torus: need L >= 2");
  if (dim < 1 || dim > 3) throw std::invalid_argument("build_torus: need d in {1,2,3}");
  if (!(beta > 0)) throw std::invalid_argument("build_torus: need beta > 0");
  std::size_t n = 1;
  for (int k = 0; k < dim; ++k) n *= static_cast<std::size_t>(side);
  std::map<std::pair<VertexId, VertexId>, int> bonds;
  for (VertexId v = 0; v < n; ++v) {
    auto x = torus_coords(v, side, dim);
    for (int k = 0; k < dim; ++k) {
      auto y = x;
      y[k] = (y[k] + 1) % side;
      VertexId w = torus_vertex(y, side);
      bonds[{std::min(v, w), std::max(v, w)}] += 1;
    }
  }
  std::vector<BasicEdge<S>> edges;
  edges.reserve(bonds.size());
  for (const auto& [key, mult] : bonds) edges.push_back({key.first, key.second, beta * S(mult), mult});
  return BasicGraph<S>(n, std::move(edges), {}, TorusInfo{side, dim});
}

/// Weighted Laplacian L = -Delta_beta: diagonal sum of incident weights,
/// off-diagonal -beta_ij.
template <Scalar S>
DenseMatrix<S> laplacian(const BasicGraph<S>& g) {
  DenseMatrix<S> lap(g.n_vertices(), g.n_vertices());
  for (const auto& e : g.edges()) {
    lap(e.i, e.i) += e.beta;
    lap(e.j, e.j) += e.beta;
    lap(e.i, e.j) -= e.beta;
    lap(e.j, e.i) -= e.beta;
  }
  return lap;
}

/// p_beta = beta / (1 + beta).
template <Scalar S>
S percolation_parameter(const S& beta) {
  if (beta < 0) throw std::invalid_argument("percolation_parameter: beta must be nonnegative");
  return beta / (S(1) + beta);
}

struct FourierMode {
  std::vector<double> p;
};

/// All momenta 2*pi*k/L of the dual torus.
std::vector<FourierMode> torus_modes(int side, int dim);

/// lambda(p) = sum_j beta_0j (1 - cos(p . j)) over the neighbours j of vertex 0.
double fourier_multiplier(const WeightedGraph& g, const FourierMode& mode);

/// Text format: "n m", then m lines "i j beta", then optional lines "v i h".
WeightedGraph read_graph(std::istream& in);
WeightedGraph read_graph_file(const std::string& path);
void write_graph(std::ostream& out, const WeightedGraph& g);

}  // namespace arbor
