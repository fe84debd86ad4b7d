#pragma once

#include "arbor/dense_matrix.hpp"
#include "arbor/graph.hpp"
#include "arbor/scalar.hpp"

#include <bit>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <omp.h>

namespace arbor {

/// Acyclic edge subset of a graph with at most 64 edges, as a bitmask
/// over edge indices.
struct ForestConfig {
  std::uint64_t edge_mask = 0;

  std::size_t size() const { return static_cast<std::size_t>(std::popcount(edge_mask)); }
  bool contains(std::size_t k) const { return (edge_mask >> k) & 1u; }
  bool operator==(const ForestConfig&) const = default;
};

/// Union-find with union by size and no path compression, so every union
/// can be undone in O(1). Tracks per-component vertex count and field sum.
template <Scalar S>
class RollbackUnionFind {
 public:
  explicit RollbackUnionFind(const std::vector<S>& field)
      : parent_(field.size()), size_(field.size(), 1), field_(field) {
    for (std::size_t v = 0; v < parent_.size(); ++v) parent_[v] = static_cast<VertexId>(v);
  }

  VertexId find(VertexId v) const {
    while (parent_[v] != v) v = parent_[v];
    return v;
  }
  std::uint32_t component_size(VertexId root) const { return size_[root]; }
  const S& component_field(VertexId root) const { return field_[root]; }
  std::size_t n_vertices() const { return parent_.size(); }

  /// Both arguments must be distinct roots.
  void unite_roots(VertexId a, VertexId b) {
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    field_[a] += field_[b];
    history_.push_back(b);
  }

  void rollback() {
    VertexId b = history_.back();
    history_.pop_back();
    VertexId a = parent_[b];
    size_[a] -= size_[b];
    field_[a] -= field_[b];
    parent_[b] = b;
  }

 private:
  std::vector<VertexId> parent_;
  std::vector<std::uint32_t> size_;
  std::vector<S> field_;
  std::vector<VertexId> history_;
};

struct EnumerationOptions {
  /// Refuse graphs with more edges than this.
  std::size_t max_edges = 30;
  /// Number of leading edges whose membership is fixed per parallel task.
  std::size_t prefix_edges = 10;
};

/// What a visitor sees at each forest: the configuration, its edge-weight
/// product, the product over trees of (1 + sum of h over the tree), and the
/// component structure.
template <Scalar S>
struct ForestState {
  ForestConfig config;
  const S& edge_weight;
  const S& tree_factor;
  const RollbackUnionFind<S>& components;

  S weight() const { return edge_weight * tree_factor; }
};

/// Backtracking enumeration of all forests of a graph. Edges are visited in
/// index order; a branch that would close a cycle is never entered, so the
/// number of leaves equals the number of forests.
template <Scalar S>
class ForestEnumerator {
 public:
  explicit ForestEnumerator(const BasicGraph<S>& g, EnumerationOptions opts = {}) : g_(g), opts_(opts) {
    if (g.n_edges() > opts.max_edges || g.n_edges() > 64)
      throw std::length_error("forest enumeration refused: graph has " + std::to_string(g.n_edges()) +
                              " edges, cap is " + std::to_string(std::min<std::size_t>(opts.max_edges, 64)));
    for (const auto& h : g.vertex_weights())
      if (h != 0) has_field_ = true;
  }

  const BasicGraph<S>& graph() const { return g_; }

  /// Serial reference enumeration.
  template <class Visit>
  void for_each(Visit&& visit) const {
    RollbackUnionFind<S> uf(g_.vertex_weights());
    S weight(1);
    S factor = initial_factor();
    descend(0, 0, weight, factor, uf, visit);
  }

  /// Prefix-parallel enumeration. The membership of the first k edges is
  /// fixed per task; each task owns an accumulator and the results are
  /// merged in prefix order, so the result does not depend on the thread
  /// count. `Acc` needs `void merge(const Acc&)`.
  template <class Acc, class Visit>
  Acc parallel_reduce(const Acc& identity, Visit visit) const {
    const std::size_t m = g_.n_edges();
    const std::size_t k = std::min(opts_.prefix_edges, m);
    const std::size_t n_prefix = std::size_t{1} << k;
    std::vector<Acc> partial(n_prefix, identity);
#pragma omp parallel for schedule(dynamic, 1)
    for (long long p = 0; p < static_cast<long long>(n_prefix); ++p) {
      RollbackUnionFind<S> uf(g_.vertex_weights());
      S weight(1);
      S factor = initial_factor();
      std::uint64_t mask = 0;
      bool acyclic = true;
      for (std::size_t e = 0; e < k && acyclic; ++e) {
        if (!((static_cast<std::uint64_t>(p) >> e) & 1u)) continue;
        const auto& edge = g_.edge(e);
        VertexId a = uf.find(edge.i), b = uf.find(edge.j);
        if (a == b) {
          acyclic = false;
          break;
        }
        absorb(uf, a, b, weight, factor, edge.beta);
        mask |= std::uint64_t{1} << e;
      }
      if (!acyclic) continue;
      Acc& acc = partial[static_cast<std::size_t>(p)];
      auto bound = [&acc, &visit](const ForestState<S>& s) { visit(acc, s); };
      descend(k, mask, weight, factor, uf, bound);
    }
    Acc total = identity;
    for (const auto& a : partial) total.merge(a);
    return total;
  }

  /// Number of forests.
  std::uint64_t count() const {
    std::uint64_t c = 0;
    for_each([&c](const ForestState<S>&) { ++c; });
    return c;
  }

 private:
  S initial_factor() const {
    S f(1);
    if (has_field_)
      for (const auto& h : g_.vertex_weights()) f *= S(1) + h;
    return f;
  }

  void absorb(RollbackUnionFind<S>& uf, VertexId a, VertexId b, S& weight, S& factor, const S& beta) const {
    weight *= beta;
    if (has_field_) {
      S fa = S(1) + uf.component_field(a);
      S fb = S(1) + uf.component_field(b);
      factor = factor / (fa * fb) * (fa + fb - S(1));
    }
    uf.unite_roots(a, b);
  }

  template <class Visit>
  void descend(std::size_t k, std::uint64_t mask, const S& weight, const S& factor, RollbackUnionFind<S>& uf,
               Visit& visit) const {
    if (k == g_.n_edges()) {
      visit(ForestState<S>{ForestConfig{mask}, weight, factor, uf});
      return;
    }
    descend(k + 1, mask, weight, factor, uf, visit);
    const auto& edge = g_.edge(k);
    VertexId a = uf.find(edge.i), b = uf.find(edge.j);
    if (a == b) return;
    S w = weight;
    S f = factor;
    absorb(uf, a, b, w, f, edge.beta);
    descend(k + 1, mask | (std::uint64_t{1} << k), w, f, uf, visit);
    uf.rollback();
  }

  const BasicGraph<S>& g_;
  EnumerationOptions opts_;
  bool has_field_ = false;
};

/// Elementwise-summed accumulator for parallel_reduce.
template <Scalar S>
struct SumVector {
  std::vector<S> v;

  explicit SumVector(std::size_t n = 0) : v(n, S(0)) {}
  void merge(const SumVector& o) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
  }
};

/// Everything the exact engine knows about a small graph. Probabilities are
/// under the tree-factor weights of the graph's own vertex field (h = 0
/// gives the plain arboreal gas).
template <Scalar S>
struct ExactSummary {
  S partition{0};
  DenseMatrix<S> connection;
  std::vector<S> edge_marginals;
  std::vector<S> tree_size_mean;
  std::uint64_t n_forests = 0;
};

template <Scalar S>
ExactSummary<S> exact_summary(const BasicGraph<S>& g, EnumerationOptions opts = {}) {
  const std::size_t n = g.n_vertices(), m = g.n_edges();
  // Layout: [Z | connection n*n | edges m | tree sizes n | forest count]
  const std::size_t off_conn = 1, off_edge = off_conn + n * n, off_tree = off_edge + m, len = off_tree + n + 1;
  ForestEnumerator<S> en(g, opts);
  auto acc = en.parallel_reduce(SumVector<S>(len), [&](SumVector<S>& a, const ForestState<S>& s) {
    S w = s.weight();
    a.v[0] += w;
    std::vector<VertexId> root(n);
    for (VertexId i = 0; i < n; ++i) root[i] = s.components.find(i);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (root[i] == root[j]) a.v[off_conn + i * n + j] += w;
    for (std::size_t e = 0; e < m; ++e)
      if (s.config.contains(e)) a.v[off_edge + e] += w;
    for (std::size_t i = 0; i < n; ++i) a.v[off_tree + i] += w * S(static_cast<long>(s.components.component_size(root[i])));
    a.v[len - 1] += S(1);
  });
  ExactSummary<S> out;
  out.partition = acc.v[0];
  out.connection = DenseMatrix<S>(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.connection(i, j) = acc.v[off_conn + i * n + j] / out.partition;
  for (std::size_t e = 0; e < m; ++e) out.edge_marginals.push_back(acc.v[off_edge + e] / out.partition);
  for (std::size_t i = 0; i < n; ++i) out.tree_size_mean.push_back(acc.v[off_tree + i] / out.partition);
  out.n_forests = static_cast<std::uint64_t>(to_double(acc.v[len - 1]));
  return out;
}

/// Z_{beta,h} = sum over forests of prod beta_e times prod over trees of (1 + sum of h).
template <Scalar S>
S partition_function(const BasicGraph<S>& g, EnumerationOptions opts = {}) {
  ForestEnumerator<S> en(g, opts);
  auto acc = en.parallel_reduce(SumVector<S>(1),
                                [](SumVector<S>& a, const ForestState<S>& s) { a.v[0] += s.weight(); });
  return acc.v[0];
}

template <Scalar S>
DenseMatrix<S> connection_matrix(const BasicGraph<S>& g, EnumerationOptions opts = {}) {
  return exact_summary(g, opts).connection;
}

/// P[S subset of F] for an edge set given as a mask.
template <Scalar S>
S edge_marginal(const BasicGraph<S>& g, std::uint64_t edge_set, EnumerationOptions opts = {}) {
  ForestEnumerator<S> en(g, opts);
  auto acc = en.parallel_reduce(SumVector<S>(2), [edge_set](SumVector<S>& a, const ForestState<S>& s) {
    S w = s.weight();
    a.v[0] += w;
    if ((s.config.edge_mask & edge_set) == edge_set) a.v[1] += w;
  });
  return acc.v[1] / acc.v[0];
}

template <Scalar S>
S expected_tree_size(const BasicGraph<S>& g, VertexId v, EnumerationOptions opts = {}) {
  if (v >= g.n_vertices()) throw std::out_of_range("expected_tree_size: vertex out of range");
  ForestEnumerator<S> en(g, opts);
  auto acc = en.parallel_reduce(SumVector<S>(2), [v](SumVector<S>& a, const ForestState<S>& s) {
    S w = s.weight();
    a.v[0] += w;
    a.v[1] += w * S(static_cast<long>(s.components.component_size(s.components.find(v))));
  });
  return acc.v[1] / acc.v[0];
}

/// <z_v>_{beta,h} = E_{beta,h}[ H(T_v) / (1 + H(T_v)) ] with H(T) the field
/// summed over the tree. For uniform h this is E[h|T_v| / (1 + h|T_v|)].
template <Scalar S>
S z0_expectation(const BasicGraph<S>& g, const std::vector<S>& h, VertexId v = 0, EnumerationOptions opts = {}) {
  if (v >= g.n_vertices()) throw std::out_of_range("z0_expectation: vertex out of range");
  auto gh = g.with_vertex_weights(h);
  ForestEnumerator<S> en(gh, opts);
  auto acc = en.parallel_reduce(SumVector<S>(2), [v](SumVector<S>& a, const ForestState<S>& s) {
    S w = s.weight();
    a.v[0] += w;
    const S& field = s.components.component_field(s.components.find(v));
    a.v[1] += w * field / (S(1) + field);
  });
  return acc.v[1] / acc.v[0];
}

template <Scalar S>
S z0_expectation(const BasicGraph<S>& g, const S& h_uniform, VertexId v = 0, EnumerationOptions opts = {}) {
  return z0_expectation(g, std::vector<S>(g.n_vertices(), h_uniform), v, opts);
}

/// P[e1, e2] - P[e1] P[e2] under the arboreal gas (h = 0).
template <Scalar S>
S na_deficit(const BasicGraph<S>& g, std::size_t e1, std::size_t e2, EnumerationOptions opts = {}) {
  if (e1 == e2) throw std::invalid_argument("na_deficit: edges must be distinct");
  if (e1 >= g.n_edges() || e2 >= g.n_edges()) throw std::out_of_range("na_deficit: edge index out of range");
  auto g0 = g.with_vertex_weights({});
  ForestEnumerator<S> en(g0, opts);
  auto acc = en.parallel_reduce(SumVector<S>(4), [e1, e2](SumVector<S>& a, const ForestState<S>& s) {
    const S& w = s.edge_weight;
    bool x = s.config.contains(e1), y = s.config.contains(e2);
    a.v[0] += w;
    if (x) a.v[1] += w;
    if (y) a.v[2] += w;
    if (x && y) a.v[3] += w;
  });
  const S& z = acc.v[0];
  return acc.v[3] / z - (acc.v[1] / z) * (acc.v[2] / z);
}

/// All pairwise deficits P[e,f] - P[e]P[f], e < f, from one enumeration.
template <Scalar S>
DenseMatrix<S> na_deficit_matrix(const BasicGraph<S>& g, EnumerationOptions opts = {}) {
  const std::size_t m = g.n_edges();
  auto g0 = g.with_vertex_weights({});
  ForestEnumerator<S> en(g0, opts);
  auto acc = en.parallel_reduce(SumVector<S>(1 + m * m), [m](SumVector<S>& a, const ForestState<S>& s) {
    const S& w = s.edge_weight;
    a.v[0] += w;
    for (std::size_t e = 0; e < m; ++e) {
      if (!s.config.contains(e)) continue;
      for (std::size_t f = e; f < m; ++f)
        if (s.config.contains(f)) a.v[1 + e * m + f] += w;
    }
  });
  DenseMatrix<S> out(m, m);
  const S& z = acc.v[0];
  for (std::size_t e = 0; e < m; ++e)
    for (std::size_t f = e + 1; f < m; ++f) {
      S d = acc.v[1 + e * m + f] / z - (acc.v[1 + e * m + e] / z) * (acc.v[1 + f * m + f] / z);
      out(e, f) = d;
      out(f, e) = d;
    }
  return out;
}

template <Scalar S>
struct DominationReport {
  std::vector<S> forest_marginals;
  std::vector<S> percolation_marginals;
  /// forest_tail[k] = P_forest[|F| >= k], likewise for percolation.
  std::vector<S> forest_tail;
  std::vector<S> percolation_tail;
  /// Largest (forest - percolation) over all compared events; <= 0 expected.
  S max_violation{0};
};

/// Compares the arboreal gas with independent bond percolation at
/// p_e = beta_e / (1 + beta_e): single-edge marginals and the tail of |F|.
template <Scalar S>
DominationReport<S> domination_check(const BasicGraph<S>& g, EnumerationOptions opts = {}) {
  const std::size_t m = g.n_edges();
  auto g0 = g.with_vertex_weights({});
  ForestEnumerator<S> en(g0, opts);
  // [Z | edge m | size histogram m+1]
  auto acc = en.parallel_reduce(SumVector<S>(1 + m + m + 1), [m](SumVector<S>& a, const ForestState<S>& s) {
    const S& w = s.edge_weight;
    a.v[0] += w;
    for (std::size_t e = 0; e < m; ++e)
      if (s.config.contains(e)) a.v[1 + e] += w;
    a.v[1 + m + s.config.size()] += w;
  });
  DominationReport<S> r;
  const S& z = acc.v[0];
  std::vector<S> p(m);
  for (std::size_t e = 0; e < m; ++e) {
    p[e] = percolation_parameter(g.edge(e).beta);
    r.forest_marginals.push_back(acc.v[1 + e] / z);
    r.percolation_marginals.push_back(p[e]);
  }
  // Poisson-binomial distribution of the number of open bonds.
  std::vector<S> dist(m + 1, S(0));
  dist[0] = S(1);
  for (std::size_t e = 0; e < m; ++e)
    for (std::size_t k = e + 2; k-- > 0;) {
      S stay = dist[k] * (S(1) - p[e]);
      S move = k > 0 ? dist[k - 1] * p[e] : S(0);
      dist[k] = stay + move;
    }
  r.forest_tail.assign(m + 2, S(0));
  r.percolation_tail.assign(m + 2, S(0));
  for (std::size_t k = m + 1; k-- > 0;) {
    r.forest_tail[k] = r.forest_tail[k + 1] + acc.v[1 + m + k] / z;
    r.percolation_tail[k] = r.percolation_tail[k + 1] + dist[k];
  }
  r.forest_tail.pop_back();
  r.percolation_tail.pop_back();
  bool first = true;
  auto consider = [&](const S& d) {
    if (first || d > r.max_violation) r.max_violation = d;
    first = false;
  };
  for (std::size_t e = 0; e < m; ++e) consider(r.forest_marginals[e] - r.percolation_marginals[e]);
  for (std::size_t k = 0; k <= m; ++k) consider(r.forest_tail[k] - r.percolation_tail[k]);
  return r;
}

/// det(L_beta + diag(h)).
template <Scalar S>
S rooted_forest_determinant(const BasicGraph<S>& g, const std::vector<S>& h) {
  if (h.size() != g.n_vertices()) throw std::invalid_argument("rooted_forest_determinant: field length mismatch");
  auto m = laplacian(g);
  for (std::size_t i = 0; i < h.size(); ++i) m(i, i) += h[i];
  return determinant(std::move(m));
}

/// Brute-force sum over rooted spanning forests of prod beta_e times prod h_root.
template <Scalar S>
S rooted_forest_sum(const BasicGraph<S>& g, const std::vector<S>& h, EnumerationOptions opts = {}) {
  auto g0 = g.with_vertex_weights(h);
  const std::size_t n = g.n_vertices();
  ForestEnumerator<S> en(g0, opts);
  auto acc = en.parallel_reduce(SumVector<S>(1), [n](SumVector<S>& a, const ForestState<S>& s) {
    S w = s.edge_weight;
    for (VertexId v = 0; v < n; ++v)
      if (s.components.find(v) == v) w *= s.components.component_field(v);
    a.v[0] += w;
  });
  return acc.v[0];
}

/// Green function of the Laplacian grounded at `pin`: inverse of the
/// reduced Laplacian, padded with a zero row/column at the pin.
template <Scalar S>
DenseMatrix<S> grounded_green_function(const BasicGraph<S>& g, VertexId pin = 0) {
  if (!g.is_connected()) throw std::invalid_argument("grounded Green function: graph is disconnected");
  const std::size_t n = g.n_vertices();
  auto reduced = inverse(laplacian(g).without(pin));
  DenseMatrix<S> out(n, n);
  for (std::size_t i = 0, ri = 0; i < n; ++i) {
    if (i == pin) continue;
    for (std::size_t j = 0, rj = 0; j < n; ++j) {
      if (j == pin) continue;
      out(i, j) = reduced(ri, rj++);
    }
    ++ri;
  }
  return out;
}

/// Weighted uniform spanning tree: P[e in T] = beta_e * effective resistance.
template <Scalar S>
S ust_edge_probability(const BasicGraph<S>& g, std::size_t e) {
  auto green = grounded_green_function(g);
  const auto& ed = g.edge(e);
  return ed.beta * (green(ed.i, ed.i) + green(ed.j, ed.j) - green(ed.i, ed.j) - green(ed.j, ed.i));
}

/// Transfer-current form of P[e1, e2] - P[e1] P[e2] for the weighted UST.
template <Scalar S>
S ust_na_deficit(const BasicGraph<S>& g, std::size_t e1, std::size_t e2) {
  if (e1 == e2) throw std::invalid_argument("ust_na_deficit: edges must be distinct");
  auto green = grounded_green_function(g);
  const auto& a = g.edge(e1);
  const auto& b = g.edge(e2);
  S y = green(a.i, b.i) - green(a.i, b.j) - green(a.j, b.i) + green(a.j, b.j);
  return -a.beta * b.beta * y * y;
}

/// Spanning-tree enumeration oracle: P_UST[edge_set subset of T].
template <Scalar S>
S ust_enumerated_probability(const BasicGraph<S>& g, std::uint64_t edge_set, EnumerationOptions opts = {}) {
  if (!g.is_connected()) throw std::invalid_argument("ust: graph is disconnected");
  const std::size_t tree_edges = g.n_vertices() - 1;
  auto g0 = g.with_vertex_weights({});
  ForestEnumerator<S> en(g0, opts);
  auto acc = en.parallel_reduce(SumVector<S>(2), [=](SumVector<S>& a, const ForestState<S>& s) {
    if (s.config.size() != tree_edges) return;
    a.v[0] += s.edge_weight;
    if ((s.config.edge_mask & edge_set) == edge_set) a.v[1] += s.edge_weight;
  });
  return acc.v[1] / acc.v[0];
}

/// JSON with fields: partition, n_forests, connection (row-major n x n),
/// edge_marginals, tree_size_mean. Rational values are written as strings.
template <Scalar S>
std::string exact_summary_json(const ExactSummary<S>& s);

/// CSV with header "row,col,value".
template <Scalar S>
void write_matrix_csv(std::ostream& out, const DenseMatrix<S>& m);

}  // namespace arbor
