#pragma once

#include "arbor/graph.hpp"

#include <boost/pending/disjoint_sets.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace arbor {

/// Link-cut trees (splay-tree based) over a fixed vertex set, with virtual
/// subtree sizes so that the size of a represented tree is available after
/// one access. All operations are amortized O(log n).
class LinkCutTree {
 public:
  explicit LinkCutTree(std::size_t n = 0) : nodes_(n + 1) {
    for (auto& x : nodes_) x.size = 1;
    nodes_[0].size = 0;  // node 0 is the null sentinel
  }

  std::size_t n_vertices() const { return nodes_.size() - 1; }

  bool connected(VertexId u, VertexId v) {
    if (u == v) return true;
    return find_root(u + 1) == find_root(v + 1);
  }

  /// Joins the trees of u and v by the edge uv; they must be in different trees.
  void link(VertexId u, VertexId v) {
    Id a = u + 1, b = v + 1;
    make_root(a);
    access(b);
    splay(b);
    nodes_[a].parent = b;
    nodes_[b].virt += nodes_[a].size;
    pull(b);
  }

  /// Removes the tree edge uv; it must be present.
  void cut(VertexId u, VertexId v) {
    Id a = u + 1, b = v + 1;
    make_root(a);
    access(b);
    splay(b);
    // With a as root, the preferred path is a..b; uv is an edge iff that path
    // is just {a, b}, i.e. a is b's left child and has no splay children.
    auto& nb = nodes_[b];
    if (nb.child[0] != a || nodes_[a].child[0] != 0 || nodes_[a].child[1] != 0) throw std::logic_error("LinkCutTree::cut: not a tree edge");
    nb.child[0] = 0;
    nodes_[a].parent = 0;
    pull(b);
  }

  /// Number of vertices in the tree containing v.
  std::size_t component_size(VertexId v) {
    Id a = v + 1;
    access(a);
    splay(a);
    return nodes_[a].size;
  }

 private:
  using Id = std::uint32_t;
  struct Node {
    Id parent = 0;
    Id child[2] = {0, 0};
    std::uint32_t size = 0;  // nodes in splay subtree plus their virtual subtrees
    std::uint32_t virt = 0;  // total size of path-parent children
    bool flip = false;
  };
  std::vector<Node> nodes_;

  bool is_root(Id x) const {
    Id p = nodes_[x].parent;
    return p == 0 || (nodes_[p].child[0] != x && nodes_[p].child[1] != x);
  }
  void pull(Id x) {
    auto& n = nodes_[x];
    n.size = 1 + nodes_[n.child[0]].size + nodes_[n.child[1]].size + n.virt;
  }
  void push(Id x) {
    auto& n = nodes_[x];
    if (!n.flip) return;
    std::swap(n.child[0], n.child[1]);
    if (n.child[0]) nodes_[n.child[0]].flip ^= true;
    if (n.child[1]) nodes_[n.child[1]].flip ^= true;
    n.flip = false;
  }
  void rotate(Id x) {
    Id p = nodes_[x].parent, g = nodes_[p].parent;
    int dir = nodes_[p].child[1] == x;
    Id b = nodes_[x].child[dir ^ 1];
    if (!is_root(p)) nodes_[g].child[nodes_[g].child[1] == p] = x;
    nodes_[x].parent = g;
    nodes_[x].child[dir ^ 1] = p;
    nodes_[p].parent = x;
    nodes_[p].child[dir] = b;
    if (b) nodes_[b].parent = p;
    pull(p);
    pull(x);
  }
  void splay(Id x) {
    // Push pending reversals from the splay root down to x.
    stack_.clear();
    for (Id y = x;; y = nodes_[y].parent) {
      stack_.push_back(y);
      if (is_root(y)) break;
    }
    for (auto it = stack_.rbegin(); it != stack_.rend(); ++it) push(*it);
    while (!is_root(x)) {
      Id p = nodes_[x].parent;
      if (!is_root(p)) {
        Id g = nodes_[p].parent;
        bool zigzig = (nodes_[g].child[1] == p) == (nodes_[p].child[1] == x);
        rotate(zigzig ? p : x);
      }
      rotate(x);
    }
  }
  void access(Id x) {
    Id last = 0;
    for (Id y = x; y; y = nodes_[y].parent) {
      splay(y);
      auto& n = nodes_[y];
      n.virt += nodes_[n.child[1]].size;
      n.virt -= nodes_[last].size;
      n.child[1] = last;
      pull(y);
      last = y;
    }
    splay(x);
  }
  void make_root(Id x) {
    access(x);
    nodes_[x].flip ^= true;
    push(x);
  }
  Id find_root(Id x) {
    access(x);
    for (;;) {
      push(x);
      if (!nodes_[x].child[0]) break;
      x = nodes_[x].child[0];
    }
    splay(x);
    return x;
  }

  std::vector<Id> stack_;
};

/// Reference connectivity: an edge list plus a union-find that is rebuilt
/// from scratch after any deletion. Slow but obviously correct.
class RebuildUnionFind {
 public:
  explicit RebuildUnionFind(std::size_t n = 0) : n_(n), adj_(n) { rebuild(); }

  std::size_t n_vertices() const { return n_; }

  bool connected(VertexId u, VertexId v) {
    if (dirty_) rebuild();
    return sets_.find_set(std::size_t{u}) == sets_.find_set(std::size_t{v});
  }
  void link(VertexId u, VertexId v) {
    adj_[u].push_back(v);
    adj_[v].push_back(u);
    if (!dirty_) {
      sets_.union_set(std::size_t{u}, std::size_t{v});
    }
  }
  void cut(VertexId u, VertexId v) {
    if (!erase_one(adj_[u], v) || !erase_one(adj_[v], u))
      throw std::logic_error("RebuildUnionFind::cut: not a tree edge");
    dirty_ = true;
  }
  std::size_t component_size(VertexId v) {
    if (dirty_) rebuild();
    std::size_t count = 0;
    auto r = sets_.find_set(std::size_t{v});
    for (std::size_t w = 0; w < n_; ++w)
      if (sets_.find_set(w) == r) ++count;
    return count;
  }

 private:
  static bool erase_one(std::vector<VertexId>& xs, VertexId x) {
    for (auto& y : xs)
      if (y == x) {
        y = xs.back();
        xs.pop_back();
        return true;
      }
    return false;
  }
  void rebuild() {
    sets_ = boost::disjoint_sets_with_storage<>(n_);
    for (std::size_t v = 0; v < n_; ++v) sets_.make_set(v);
    for (std::size_t v = 0; v < n_; ++v)
      for (auto w : adj_[v])
        if (v < w) sets_.union_set(v, std::size_t{w});
    dirty_ = false;
  }

  std::size_t n_;
  std::vector<std::vector<VertexId>> adj_;
  boost::disjoint_sets_with_storage<> sets_{0};
  bool dirty_ = false;
};

/// An occupied-edge mask over a graph together with a connectivity structure
/// holding exactly the occupied edges. Links are refused between vertices
/// that are already connected, so the mask stays acyclic.
template <class Connectivity = LinkCutTree>
class DynamicForest {
 public:
  explicit DynamicForest(const WeightedGraph& g) : g_(&g), occupied_(g.n_edges(), 0), conn_(g.n_vertices()) {}

  const WeightedGraph& graph() const { return *g_; }
  bool contains(std::size_t e) const { return occupied_[e] != 0; }
  const std::vector<std::uint8_t>& mask() const { return occupied_; }
  std::size_t n_occupied() const { return n_occupied_; }

  bool connected(VertexId u, VertexId v) { return conn_.connected(u, v); }
  std::size_t component_size(VertexId v) { return conn_.component_size(v); }

  /// Adds edge e; throws if it is present or would close a cycle.
  void link(std::size_t e) {
    const auto& ed = g_->edge(e);
    if (occupied_[e]) throw std::logic_error("DynamicForest::link: edge " + std::to_string(e) + " already present");
    if (conn_.connected(ed.i, ed.j)) throw std::logic_error("DynamicForest::link: edge " + std::to_string(e) + " closes a cycle");
    link_unchecked(e);
  }
  void cut(std::size_t e) {
    if (!occupied_[e]) throw std::logic_error("DynamicForest::cut: edge " + std::to_string(e) + " absent");
    cut_unchecked(e);
  }

  /// Callers that already established the precondition.
  void link_unchecked(std::size_t e) {
    const auto& ed = g_->edge(e);
    conn_.link(ed.i, ed.j);
    occupied_[e] = 1;
    ++n_occupied_;
  }
  void cut_unchecked(std::size_t e) {
    const auto& ed = g_->edge(e);
    conn_.cut(ed.i, ed.j);
    occupied_[e] = 0;
    --n_occupied_;
  }

 private:
  const WeightedGraph* g_;
  std::vector<std::uint8_t> occupied_;
  std::size_t n_occupied_ = 0;
  Connectivity conn_;
};

}  // namespace arbor
