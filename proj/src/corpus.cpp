#include "arbor/corpus.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace arbor {

namespace {

using PairList = std::vector<std::pair<VertexId, VertexId>>;

PairList all_pairs(std::size_t n) {
  PairList pairs;
  for (VertexId i = 0; i < n; ++i)
    for (VertexId j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  return pairs;
}

bool connected(std::size_t n, const PairList& pairs, std::uint32_t mask) {
  std::vector<VertexId> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](VertexId x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t comps = n;
  for (std::size_t k = 0; k < pairs.size(); ++k)
    if ((mask >> k) & 1) {
      auto a = find(pairs[k].first), b = find(pairs[k].second);
      if (a != b) {
        parent[a] = b;
        --comps;
      }
    }
  return comps == 1;
}

}  // namespace

std::vector<GraphShape> connected_graphs(std::size_t n) {
  if (n == 0 || n > 7) throw std::invalid_argument("connected_graphs: supported for 1 <= n <= 7");
  const PairList pairs = all_pairs(n);
  std::vector<std::size_t> index(n * n);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    index[pairs[k].first * n + pairs[k].second] = k;
    index[pairs[k].second * n + pairs[k].first] = k;
  }
  std::vector<std::vector<VertexId>> perms;
  std::vector<VertexId> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  do perms.push_back(perm);
  while (std::next_permutation(perm.begin(), perm.end()));

  std::set<std::uint32_t> seen;
  std::vector<GraphShape> out;
  for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << pairs.size()); ++mask) {
    if (!connected(n, pairs, mask)) continue;
    std::uint32_t canon = ~std::uint32_t{0};
    for (const auto& p : perms) {
      std::uint32_t img = 0;
      for (std::size_t k = 0; k < pairs.size(); ++k)
        if ((mask >> k) & 1) img |= std::uint32_t{1} << index[p[pairs[k].first] * n + p[pairs[k].second]];
      canon = std::min(canon, img);
    }
    if (!seen.insert(canon).second) continue;
    GraphShape s{n, {}};
    for (std::size_t k = 0; k < pairs.size(); ++k)
      if ((canon >> k) & 1) s.edges.push_back(pairs[k]);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<GraphShape> small_graph_corpus(std::size_t max_vertices) {
  std::vector<GraphShape> out;
  for (std::size_t n = 1; n <= max_vertices; ++n) {
    auto g = connected_graphs(n);
    out.insert(out.end(), g.begin(), g.end());
  }
  return out;
}

RationalGraph random_rational_weights(const GraphShape& shape, std::mt19937_64& rng, bool with_field) {
  std::uniform_int_distribution<long> num(1, 9), num0(0, 9), den(1, 5);
  std::vector<RationalGraph::Edge> edges;
  for (auto [i, j] : shape.edges) edges.push_back({i, j, make_rational(num(rng), den(rng)), 1});
  std::vector<Rational> h(shape.n_vertices, Rational(0));
  if (with_field)
    for (auto& x : h) x = make_rational(num0(rng), den(rng));
  return RationalGraph(shape.n_vertices, std::move(edges), std::move(h));
}

}  // namespace arbor
