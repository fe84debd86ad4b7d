#pragma once

#include "arbor/chain_stats.hpp"
#include "arbor/dynamic_forest.hpp"
#include "arbor/graph.hpp"

#include <bit>
#include <exception>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <omp.h>

namespace arbor {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Independent stream for chain k of a run seeded with `seed`.
inline Rng chain_rng(std::uint64_t seed, std::uint64_t k) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  return Rng(seq);
}

struct ChainParams {
  /// Total sweeps including burn-in; measurements use the last sweeps - burn_in.
  std::uint64_t sweeps = 100000;
  std::uint64_t burn_in = 1000;
  std::uint64_t seed = 1;
  /// Independent chains, run in parallel and merged in chain order.
  std::uint64_t chains = 1;
  /// If set, raw per-sweep observable values are written here as
  /// little-endian f64 (one file per chain; ".chainK" appended when chains > 1).
  std::optional<std::string> trace_path;

  void validate() const;
};

/// Default burn-in for tori: 10 L^2 sweeps.
std::uint64_t default_torus_burn_in(const WeightedGraph& g);

/// Parsed observable. Names:
///   edge:K      indicator that edge K is occupied
///   conn:J      indicator 0 <-> J
///   tree_size   |T_0|
///   num_trees   n - |F|
///   density     |T_0| / n
///   conn_avg:X_Y..  average of [v <-> v + x] over origins v and over the
///                   cyclic coordinate rotations of x (tori only)
///   density_avg     translation average of |T_v| / n, i.e. sum_C |C|^2 / n^2
struct ObservableSpec {
  enum class Kind { Edge, Connect, TreeSize, NumTrees, Density, ConnectAvg, DensityAvg };
  Kind kind = Kind::TreeSize;
  std::string name;
  std::size_t index = 0;
  /// ConnectAvg: for each rotation of the displacement, the target vertex of
  /// each origin.
  std::vector<std::vector<VertexId>> shifts;
};

std::vector<ObservableSpec> parse_observables(const WeightedGraph& g, const std::vector<std::string>& names);

/// Component labelling of the occupied edges, recomputed on demand.
class ComponentSnapshot {
 public:
  explicit ComponentSnapshot(std::size_t n) : n_(n), label_(n), size_(n) {}
  void rebuild(const WeightedGraph& g, const std::vector<std::uint8_t>& mask);
  std::uint32_t label(VertexId v) const { return label_[v]; }
  std::uint32_t size_of(VertexId v) const { return size_[label_[v]]; }
  /// sum over components of |C|^2.
  double sum_squares() const { return sum_sq_; }

 private:
  std::size_t n_;
  std::vector<std::uint32_t> label_, size_;
  double sum_sq_ = 0.0;
};

/// Heat-bath resampling of edge e given the rest of the forest: present ->
/// removed with probability 1/(1+beta); absent with endpoints connected ->
/// stays absent; absent otherwise -> inserted with probability beta/(1+beta).
template <class C>
inline void heat_bath_update(DynamicForest<C>& f, std::size_t e, double p_occupy, Rng& rng) {
  const bool want = uniform01(rng) < p_occupy;
  if (f.contains(e)) {
    if (!want) f.cut_unchecked(e);
  } else if (want) {
    const auto& ed = f.graph().edge(e);
    if (!f.connected(ed.i, ed.j)) f.link_unchecked(e);
  }
}

/// One pass of heat_bath_update over all edges in index order.
template <class C>
void heat_bath_sweep(DynamicForest<C>& f, const std::vector<double>& p_occupy, Rng& rng) {
  const std::size_t m = f.graph().n_edges();
  for (std::size_t e = 0; e < m; ++e) heat_bath_update(f, e, p_occupy[e], rng);
}

/// beta_e / (1 + beta_e) per edge.
std::vector<double> occupation_probabilities(const WeightedGraph& g);

/// Throws std::logic_error if the occupied edges contain a cycle.
void audit_acyclic(const WeightedGraph& g, const std::vector<std::uint8_t>& mask);

namespace detail {

void measure(const std::vector<ObservableSpec>& obs, const WeightedGraph& g, const std::vector<std::uint8_t>& mask,
             std::size_t n_occupied, ComponentSnapshot& snap, bool need_snapshot, std::vector<double>& out);

bool needs_snapshot(const std::vector<ObservableSpec>& obs);

void write_trace_values(std::ofstream& out, const std::vector<double>& values);

std::string trace_file(const ChainParams& p, std::uint64_t k);

}  // namespace detail

/// A single chain k of a run, starting from the empty forest.
template <class C = LinkCutTree>
ChainStats run_single_chain(const WeightedGraph& g, const std::vector<ObservableSpec>& obs, const ChainParams& params,
                            std::uint64_t k) {
  params.validate();
  Rng rng = chain_rng(params.seed, k);
  DynamicForest<C> f(g);
  const auto p = occupation_probabilities(g);
  const std::uint64_t measured = params.sweeps - params.burn_in;

  ChainStats stats;
  stats.seed = params.seed;
  stats.sweeps = params.sweeps;
  stats.burn_in = params.burn_in;
  for (const auto& o : obs) {
    stats.names.push_back(o.name);
    stats.acc.emplace_back(measured);
  }

  std::ofstream trace;
  if (params.trace_path) {
    trace.open(detail::trace_file(params, k), std::ios::binary);
    if (!trace) throw std::runtime_error("cannot open trace file " + detail::trace_file(params, k));
  }

  ComponentSnapshot snap(g.n_vertices());
  const bool need_snap = detail::needs_snapshot(obs);
  std::vector<double> values(obs.size());
  for (std::uint64_t s = 0; s < params.sweeps; ++s) {
    heat_bath_sweep(f, p, rng);
#ifndef NDEBUG
    if ((s + 1) % 1000 == 0) audit_acyclic(g, f.mask());
#endif
    if (s < params.burn_in) continue;
    detail::measure(obs, g, f.mask(), f.n_occupied(), snap, need_snap, values);
    for (std::size_t k2 = 0; k2 < obs.size(); ++k2) stats.acc[k2].add(values[k2]);
    if (trace.is_open()) detail::write_trace_values(trace, values);
  }
  return stats;
}

/// Runs params.chains independent chains (in parallel) and merges them in order.
template <class C = LinkCutTree>
ChainStats run_chain(const WeightedGraph& g, const std::vector<ObservableSpec>& obs, const ChainParams& params) {
  params.validate();
  std::vector<ChainStats> parts(params.chains);
  std::vector<std::exception_ptr> errors(params.chains);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(params.chains); ++k) {
    try {
      parts[k] = run_single_chain<C>(g, obs, params, static_cast<std::uint64_t>(k));
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  ChainStats out = std::move(parts[0]);
  for (std::size_t k = 1; k < parts.size(); ++k) out.merge(parts[k]);
  return out;
}

ChainStats run_chain(const WeightedGraph& g, const std::vector<std::string>& observables, const ChainParams& params);

struct TwoPointEstimate {
  std::vector<int> displacement;
  ObservableSummary estimate;
};

/// Translation- and axis-averaged P[0 <-> x] on a torus for each displacement.
std::vector<TwoPointEstimate> estimate_two_point(const WeightedGraph& torus,
                                                 const std::vector<std::vector<int>>& displacements,
                                                 const ChainParams& params);

/// Translation-averaged E|T_0| / |Lambda| on a torus.
ObservableSummary estimate_density(const WeightedGraph& torus, const ChainParams& params);

/// Least-squares slope of log P against log r over the positive estimates.
double log_log_slope(const std::vector<double>& r, const std::vector<double>& p);

}  // namespace arbor
