#pragma once

#include "arbor/graph.hpp"

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace arbor {

struct GraphShape {
  std::size_t n_vertices = 0;
  std::vector<std::pair<VertexId, VertexId>> edges;
};

/// Every connected simple graph on n vertices, one representative per
/// isomorphism class, in a deterministic order.
std::vector<GraphShape> connected_graphs(std::size_t n);

/// Connected graphs on 1..max_vertices vertices (31 shapes for 5).
std::vector<GraphShape> small_graph_corpus(std::size_t max_vertices = 5);

/// Rational weights p/q with p in [1,9], q in [1,5]; the field, when drawn,
/// uses p in [0,9] so zero fields appear.
RationalGraph random_rational_weights(const GraphShape& shape, std::mt19937_64& rng, bool with_field);

}  // namespace arbor
