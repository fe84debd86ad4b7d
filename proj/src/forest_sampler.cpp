#include "arbor/forest_sampler.hpp"

#include <boost/pending/disjoint_sets.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace arbor {

void ChainParams::validate() const {
  if (sweeps <= burn_in) throw std::invalid_argument("chain: sweeps must exceed burn_in");
  if (chains == 0) throw std::invalid_argument("chain: chains must be positive");
}

std::uint64_t default_torus_burn_in(const WeightedGraph& g) {
  if (!g.torus()) throw std::invalid_argument("default_torus_burn_in: not a torus");
  const auto L = static_cast<std::uint64_t>(g.torus()->side);
  return 10 * L * L;
}

std::vector<double> occupation_probabilities(const WeightedGraph& g) {
  std::vector<double> p;
  p.reserve(g.n_edges());
  for (const auto& e : g.edges()) p.push_back(e.beta / (1.0 + e.beta));
  return p;
}

void audit_acyclic(const WeightedGraph& g, const std::vector<std::uint8_t>& mask) {
  boost::disjoint_sets_with_storage<> sets(g.n_vertices());
  for (std::size_t v = 0; v < g.n_vertices(); ++v) sets.make_set(v);
  for (std::size_t e = 0; e < g.n_edges(); ++e) {
    if (!mask[e]) continue;
    const auto& ed = g.edge(e);
    if (sets.find_set(std::size_t{ed.i}) == sets.find_set(std::size_t{ed.j}))
      throw std::logic_error("forest audit: occupied edge " + std::to_string(e) + " closes a cycle");
    sets.union_set(std::size_t{ed.i}, std::size_t{ed.j});
  }
}

void ComponentSnapshot::rebuild(const WeightedGraph& g, const std::vector<std::uint8_t>& mask) {
  boost::disjoint_sets_with_storage<> sets(n_);
  for (std::size_t v = 0; v < n_; ++v) sets.make_set(v);
  for (std::size_t e = 0; e < mask.size(); ++e)
    if (mask[e]) sets.union_set(std::size_t{g.edge(e).i}, std::size_t{g.edge(e).j});
  std::fill(size_.begin(), size_.end(), 0u);
  for (std::size_t v = 0; v < n_; ++v) {
    label_[v] = static_cast<std::uint32_t>(sets.find_set(v));
    ++size_[label_[v]];
  }
  sum_sq_ = 0.0;
  for (auto s : size_) sum_sq_ += static_cast<double>(s) * s;
}

namespace {

std::vector<int> parse_displacement(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, '_')) {
    std::size_t used = 0;
    int x = std::stoi(part, &used);
    if (used != part.size()) throw std::invalid_argument("bad displacement component '" + part + "'");
    out.push_back(x);
  }
  return out;
}

std::size_t parse_index(const std::string& text, std::size_t bound, const std::string& name) {
  std::size_t used = 0;
  unsigned long long k = 0;
  try {
    k = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw std::invalid_argument("observable " + name + ": bad index");
  if (k >= bound) throw std::out_of_range("observable " + name + ": index out of range");
  return static_cast<std::size_t>(k);
}

}  // namespace

std::vector<ObservableSpec> parse_observables(const WeightedGraph& g, const std::vector<std::string>& names) {
  using K = ObservableSpec::Kind;
  std::vector<ObservableSpec> out;
  for (const auto& name : names) {
    ObservableSpec o;
    o.name = name;
    auto colon = name.find(':');
    std::string head = name.substr(0, colon), arg = colon == std::string::npos ? "" : name.substr(colon + 1);
    if (colon == std::string::npos) {
      if (name == "tree_size") o.kind = K::TreeSize;
      else if (name == "num_trees") o.kind = K::NumTrees;
      else if (name == "density") o.kind = K::Density;
      else if (name == "density_avg") o.kind = K::DensityAvg;
      else throw std::invalid_argument("unknown observable '" + name + "'");
    } else if (head == "edge") {
      o.kind = K::Edge;
      o.index = parse_index(arg, g.n_edges(), name);
    } else if (head == "conn") {
      o.kind = K::Connect;
      o.index = parse_index(arg, g.n_vertices(), name);
    } else if (head == "conn_avg") {
      if (!g.torus()) throw std::invalid_argument("observable " + name + " needs a torus");
      const int L = g.torus()->side, d = g.torus()->dim;
      auto x = parse_displacement(arg);
      if (static_cast<int>(x.size()) != d)
        throw std::invalid_argument("observable " + name + ": displacement needs " + std::to_string(d) + " components");
      for (int c : x)
        if (c <= -L || c >= L) throw std::out_of_range("observable " + name + ": displacement outside torus");
      o.kind = K::ConnectAvg;
      std::vector<std::vector<int>> rotations;
      for (int r = 0; r < d; ++r) {
        std::vector<int> y(d);
        for (int c = 0; c < d; ++c) y[c] = x[(c + r) % d];
        if (std::find(rotations.begin(), rotations.end(), y) == rotations.end()) rotations.push_back(y);
      }
      for (const auto& y : rotations) {
        std::vector<VertexId> shift(g.n_vertices());
        for (std::size_t v = 0; v < g.n_vertices(); ++v) {
          auto c = torus_coords(static_cast<VertexId>(v), L, d);
          for (int a = 0; a < d; ++a) c[a] = ((c[a] + y[a]) % L + L) % L;
          shift[v] = torus_vertex(c, L);
        }
        o.shifts.push_back(std::move(shift));
      }
    } else {
      throw std::invalid_argument("unknown observable '" + name + "'");
    }
    out.push_back(std::move(o));
  }
  return out;
}

namespace detail {

bool needs_snapshot(const std::vector<ObservableSpec>& obs) {
  using K = ObservableSpec::Kind;
  return std::any_of(obs.begin(), obs.end(), [](const ObservableSpec& o) {
    return o.kind != K::Edge && o.kind != K::NumTrees;
  });
}

void measure(const std::vector<ObservableSpec>& obs, const WeightedGraph& g, const std::vector<std::uint8_t>& mask,
             std::size_t n_occupied, ComponentSnapshot& snap, bool need_snapshot, std::vector<double>& out) {
  using K = ObservableSpec::Kind;
  const std::size_t n = g.n_vertices();
  if (need_snapshot) snap.rebuild(g, mask);
  for (std::size_t k = 0; k < obs.size(); ++k) {
    const auto& o = obs[k];
    double x = 0.0;
    switch (o.kind) {
      case K::Edge: x = mask[o.index] ? 1.0 : 0.0; break;
      case K::Connect: x = snap.label(0) == snap.label(static_cast<VertexId>(o.index)) ? 1.0 : 0.0; break;
      case K::TreeSize: x = snap.size_of(0); break;
      case K::NumTrees: x = static_cast<double>(n - n_occupied); break;
      case K::Density: x = static_cast<double>(snap.size_of(0)) / static_cast<double>(n); break;
      case K::DensityAvg: x = snap.sum_squares() / (static_cast<double>(n) * static_cast<double>(n)); break;
      case K::ConnectAvg: {
        std::uint64_t hits = 0;
        for (const auto& shift : o.shifts)
          for (std::size_t v = 0; v < n; ++v) hits += snap.label(static_cast<VertexId>(v)) == snap.label(shift[v]);
        x = static_cast<double>(hits) / static_cast<double>(n * o.shifts.size());
        break;
      }
    }
    out[k] = x;
  }
}

void write_trace_values(std::ofstream& out, const std::vector<double>& values) {
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
}

std::string trace_file(const ChainParams& p, std::uint64_t k) {
  if (p.chains == 1) return *p.trace_path;
  return *p.trace_path + ".chain" + std::to_string(k);
}

}  // namespace detail

ChainStats run_chain(const WeightedGraph& g, const std::vector<std::string>& observables, const ChainParams& params) {
  return run_chain<LinkCutTree>(g, parse_observables(g, observables), params);
}

namespace {

std::string displacement_name(const std::vector<int>& x) {
  std::string s = "conn_avg:";
  for (std::size_t a = 0; a < x.size(); ++a) s += (a ? "_" : "") + std::to_string(x[a]);
  return s;
}

}  // namespace

std::vector<TwoPointEstimate> estimate_two_point(const WeightedGraph& torus,
                                                 const std::vector<std::vector<int>>& displacements,
                                                 const ChainParams& params) {
  if (!torus.torus()) throw std::invalid_argument("estimate_two_point: not a torus");
  std::vector<std::string> names;
  for (const auto& x : displacements) names.push_back(displacement_name(x));
  auto stats = run_chain(torus, names, params);
  std::vector<TwoPointEstimate> out;
  for (std::size_t k = 0; k < displacements.size(); ++k) out.push_back({displacements[k], stats.summary(k)});
  return out;
}

ObservableSummary estimate_density(const WeightedGraph& torus, const ChainParams& params) {
  if (!torus.torus()) throw std::invalid_argument("estimate_density: not a torus");
  return run_chain(torus, {"density_avg"}, params).summary(0);
}

double log_log_slope(const std::vector<double>& r, const std::vector<double>& p) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < std::min(r.size(), p.size()); ++k) {
    if (r[k] <= 0 || p[k] <= 0) continue;
    double x = std::log(r[k]), y = std::log(p[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw std::invalid_argument("log_log_slope: need two positive points");
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

}  // namespace arbor
