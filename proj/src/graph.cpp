#include "arbor/graph.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace arbor {

std::vector<FourierMode> torus_modes(int side, int dim) {
  if (side < 1 || dim < 1) throw std::invalid_argument("torus_modes: bad torus shape");
  std::size_t count = 1;
  for (int k = 0; k < dim; ++k) count *= static_cast<std::size_t>(side);
  std::vector<FourierMode> modes;
  modes.reserve(count);
  for (std::size_t idx = 0; idx < count; ++idx) {
    FourierMode m;
    auto k = torus_coords(static_cast<VertexId>(idx), side, dim);
    for (int c : k) m.p.push_back(2.0 * std::numbers::pi * c / side);
    modes.push_back(std::move(m));
  }
  return modes;
}

double fourier_multiplier(const WeightedGraph& g, const FourierMode& mode) {
  if (!g.torus()) throw std::invalid_argument("fourier_multiplier: graph carries no torus metadata");
  const auto [side, dim] = *g.torus();
  if (static_cast<int>(mode.p.size()) != dim) throw std::invalid_argument("fourier_multiplier: mode dimension mismatch");
  double lambda = 0.0;
  for (auto k : g.incident(0)) {
    const auto& e = g.edge(k);
    VertexId j = e.i == 0 ? e.j : e.i;
    auto x = torus_coords(j, side, dim);
    double phase = 0.0;
    for (int c = 0; c < dim; ++c) phase += mode.p[c] * x[c];
    lambda += e.beta * (1.0 - std::cos(phase));
  }
  return lambda;
}

namespace {

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw std::invalid_argument("graph file line " + std::to_string(line) + ": " + what);
}

}  // namespace

WeightedGraph read_graph(std::istream& in) {
  std::string raw;
  std::size_t line_no = 0;
  auto next_line = [&](std::string& out) {
    while (std::getline(in, raw)) {
      ++line_no;
      auto hash = raw.find('#');
      if (hash != std::string::npos) raw.erase(hash);
      if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
      out = raw;
      return true;
    }
    return false;
  };

  std::string line;
  if (!next_line(line)) parse_error(line_no, "missing header 'n m'");
  long n = -1, m = -1;
  {
    std::istringstream ss(line);
    if (!(ss >> n >> m) || n < 0 || m < 0) parse_error(line_no, "header must be two nonnegative integers");
    std::string extra;
    if (ss >> extra) parse_error(line_no, "trailing tokens in header");
  }
  std::vector<WeightedGraph::Edge> edges;
  std::set<std::pair<VertexId, VertexId>> seen;
  for (long k = 0; k < m; ++k) {
    if (!next_line(line)) parse_error(line_no, "expected " + std::to_string(m) + " edge lines");
    std::istringstream ss(line);
    long i = -1, j = -1;
    double beta = 0;
    if (!(ss >> i >> j >> beta)) parse_error(line_no, "edge line must be 'i j beta'");
    if (i < 0 || j < 0 || i >= n || j >= n) parse_error(line_no, "vertex id out of range");
    if (i == j) parse_error(line_no, "self-loop");
    if (!(beta >= 0)) parse_error(line_no, "edge weight must be nonnegative");
    std::pair<VertexId, VertexId> key{static_cast<VertexId>(std::min(i, j)), static_cast<VertexId>(std::max(i, j))};
    if (!seen.insert(key).second) parse_error(line_no, "duplicate edge " + std::to_string(i) + " " + std::to_string(j));
    edges.push_back({static_cast<VertexId>(i), static_cast<VertexId>(j), beta, 1});
  }
  std::vector<double> h(static_cast<std::size_t>(n), 0.0);
  while (next_line(line)) {
    std::istringstream ss(line);
    std::string tag;
    long i = -1;
    double hv = 0;
    if (!(ss >> tag >> i >> hv) || tag != "v") parse_error(line_no, "vertex line must be 'v i h'");
    if (i < 0 || i >= n) parse_error(line_no, "vertex id out of range");
    if (!(hv >= 0)) parse_error(line_no, "vertex weight must be nonnegative");
    h[static_cast<std::size_t>(i)] = hv;
  }
  return WeightedGraph(static_cast<std::size_t>(n), std::move(edges), std::move(h));
}

WeightedGraph read_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph file: " + path);
  return read_graph(in);
}

void write_graph(std::ostream& out, const WeightedGraph& g) {
  out << g.n_vertices() << ' ' << g.n_edges() << '\n';
  for (const auto& e : g.edges()) out << e.i << ' ' << e.j << ' ' << to_string(e.beta) << '\n';
  const auto& h = g.vertex_weights();
  for (std::size_t i = 0; i < h.size(); ++i)
    if (h[i] != 0.0) out << "v " << i << ' ' << to_string(h[i]) << '\n';
}

}  // namespace arbor
