#include "doctest.h"

#include "arbor/exact.hpp"
#include "arbor/forest_sampler.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>

using namespace arbor;

namespace {

WeightedGraph single_edge(double beta) { return WeightedGraph(2, {{0, 1, beta, 1}}); }

ChainParams params(std::uint64_t sweeps, std::uint64_t burn_in, std::uint64_t seed = 7) {
  ChainParams p;
  p.sweeps = sweeps;
  p.burn_in = burn_in;
  p.seed = seed;
  return p;
}

void check_within(const ObservableSummary& s, double exact, double sigmas = 3.0) {
  INFO(s.name << ": " << s.mean << " +- " << s.stderr_mean << " vs " << exact);
  CHECK(s.stderr_mean > 0.0);
  CHECK(std::abs(s.mean - exact) <= sigmas * s.stderr_mean);
}

}  // namespace

TEST_CASE("batch means on independent samples") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(2.0, 1.5);
  const std::uint64_t n = 64000;
  BatchMeans b(n);
  for (std::uint64_t k = 0; k < n; ++k) b.add(normal(rng));
  CHECK(b.n_batches() == 64);
  CHECK(b.batch_size() == 1000);
  CHECK(b.mean() == doctest::Approx(2.0).epsilon(0.03));
  CHECK(b.variance() == doctest::Approx(2.25).epsilon(0.03));
  // stderr ~ sigma / sqrt(n); the batch estimate has ~1/sqrt(64) relative noise.
  CHECK(b.stderr_mean() == doctest::Approx(1.5 / std::sqrt(double(n))).epsilon(0.3));
  CHECK(b.tau_int() == doctest::Approx(0.5).epsilon(0.35));
}

TEST_CASE("batch means recover the autocorrelation time of an AR(1) process") {
  // x_{t+1} = rho x_t + noise has tau_int = (1 + rho) / (2 (1 - rho)).
  const double rho = 0.8;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::uint64_t n = 640000;
  BatchMeans b(n);
  double x = 0.0;
  for (std::uint64_t k = 0; k < n; ++k) {
    x = rho * x + normal(rng);
    b.add(x);
  }
  CHECK(b.tau_int() == doctest::Approx((1 + rho) / (2 * (1 - rho))).epsilon(0.3));
}

TEST_CASE("batch means merge is associative and matches a single stream") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  BatchMeans a(640), b(640), c(640), all(640);
  for (int k = 0; k < 640; ++k) {
    double x = u(rng), y = u(rng), z = u(rng);
    a.add(x);
    b.add(y);
    c.add(z);
  }
  BatchMeans left = a, right = b;
  left.merge(b);
  left.merge(c);
  right.merge(c);
  BatchMeans right_total = a;
  right_total.merge(right);
  CHECK(left.count() == 1920);
  CHECK(left.n_batches() == 192);
  CHECK(left.mean() == doctest::Approx(right_total.mean()).epsilon(1e-14));
  CHECK(left.variance() == doctest::Approx(right_total.variance()).epsilon(1e-12));
  CHECK(left.stderr_mean() == doctest::Approx(right_total.stderr_mean()).epsilon(1e-12));
  BatchMeans other(6400);
  other.add(1.0);
  CHECK_THROWS_AS(a.merge(other), std::invalid_argument);
}

TEST_CASE("link-cut tree agrees with the rebuilt union-find under random operations") {
  const std::size_t n = 60;
  auto g = build_complete<double>(n, 1.0);
  DynamicForest<LinkCutTree> fast(g);
  DynamicForest<RebuildUnionFind> slow(g);
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<std::size_t> pick_edge(0, g.n_edges() - 1);
  std::uniform_int_distribution<VertexId> pick_vertex(0, static_cast<VertexId>(n - 1));
  for (int step = 0; step < 20000; ++step) {
    std::size_t e = pick_edge(rng);
    const auto& ed = g.edge(e);
    if (fast.contains(e)) {
      fast.cut(e);
      slow.cut(e);
    } else if (!slow.connected(ed.i, ed.j)) {
      REQUIRE_FALSE(fast.connected(ed.i, ed.j));
      fast.link(e);
      slow.link(e);
    } else {
      REQUIRE(fast.connected(ed.i, ed.j));
      CHECK_THROWS_AS(fast.link(e), std::logic_error);
    }
    VertexId a = pick_vertex(rng), b = pick_vertex(rng);
    REQUIRE(fast.connected(a, b) == slow.connected(a, b));
    REQUIRE(fast.component_size(a) == slow.component_size(a));
  }
  CHECK(fast.mask() == slow.mask());
  audit_acyclic(g, fast.mask());
}

TEST_CASE("dynamic forest rejects invalid operations") {
  auto g = build_complete<double>(3, 3.0);
  DynamicForest<> f(g);
  f.link(0);
  f.link(1);
  CHECK(f.component_size(2) == 3);
  CHECK_THROWS_AS(f.link(2), std::logic_error);  // closes the triangle
  CHECK_THROWS_AS(f.link(0), std::logic_error);  // already present
  f.cut(0);
  CHECK_THROWS_AS(f.cut(0), std::logic_error);
  CHECK(f.n_occupied() == 1);
}

TEST_CASE("single edge: stationary occupation beta/(1+beta)") {
  auto g = single_edge(1.5);
  auto s = run_chain(g, {"edge:0", "conn:1"}, params(200000, 100));
  check_within(s.summary("edge:0"), 0.6);
  CHECK(s.summary("edge:0").mean == s.summary("conn:1").mean);
}

TEST_CASE("beta = 0 absorbs at the empty forest") {
  // build_torus demands beta > 0, so zero the weights of a unit torus.
  auto unit = build_torus<double>(4, 2, 1.0);
  auto edges = unit.edges();
  for (auto& e : edges) e.beta = 0.0;
  WeightedGraph g(unit.n_vertices(), edges, {}, unit.torus());
  auto s = run_chain(g, {"num_trees", "tree_size", "density_avg"}, params(200, 10));
  CHECK(s.summary("num_trees").mean == 16.0);
  CHECK(s.summary("num_trees").stderr_mean == 0.0);
  CHECK(s.summary("tree_size").mean == 1.0);
  CHECK(s.summary("density_avg").mean == doctest::Approx(1.0 / 16));
}

TEST_CASE("triangle at beta = 1: P[0<->1] = 4/7") {
  auto g = build_complete<double>(3, 3.0);
  auto s = run_chain(g, {"conn:1", "tree_size", "num_trees"}, params(1000000, 1000));
  check_within(s.summary("conn:1"), 4.0 / 7.0);
  CHECK(s.summary("conn:1").stderr_mean <= 0.005);
  // E|T_0| = 1 + 2 P[0<->1]; E|F| = (3 + 6)/7.
  check_within(s.summary("tree_size"), 1.0 + 8.0 / 7.0);
  check_within(s.summary("num_trees"), 3.0 - 9.0 / 7.0);
}

TEST_CASE("per-edge updates satisfy detailed balance on the triangle") {
  auto g = build_complete<double>(3, 3.0 * 2.0);  // beta = 2
  DynamicForest<> f(g);
  const auto p = occupation_probabilities(g);
  Rng rng(9);
  auto code = [&] { return f.mask()[0] | (f.mask()[1] << 1) | (f.mask()[2] << 2); };
  std::map<std::pair<int, int>, double> flow;
  for (int sweep = 0; sweep < 300000; ++sweep)
    for (std::size_t e = 0; e < 3; ++e) {
      int before = code();
      heat_bath_update(f, e, p[e], rng);
      int after = code();
      if (before != after) flow[{before, after}] += 1;
    }
  CHECK(flow.count({0, 7}) == 0);
  CHECK(flow.count({3, 7}) == 0);  // never closes the cycle
  int pairs = 0;
  for (const auto& [key, n_fwd] : flow) {
    double n_back = flow.count({key.second, key.first}) ? flow.at({key.second, key.first}) : 0.0;
    INFO(key.first << " -> " << key.second << ": " << n_fwd << " vs " << n_back);
    CHECK(std::abs(n_fwd - n_back) <= 3.0 * std::sqrt(n_fwd + n_back));
    ++pairs;
  }
  CHECK(pairs == 18);  // 3 empty<->single and 6 single<->pair links, both directions
}

TEST_CASE("K5 at alpha = 2 and the 3x3 torus match exact enumeration") {
  auto k5 = build_complete<double>(5, 2.0);
  auto exact5 = connection_matrix(k5);
  auto s5 = run_chain(k5, {"conn:1", "tree_size"}, params(300000, 1000));
  check_within(s5.summary("conn:1"), exact5(0, 1));
  check_within(s5.summary("tree_size"), expected_tree_size(k5, 0));

  auto torus = build_torus<double>(3, 2, 1.0);
  const double exact_t0 = expected_tree_size(torus, 0);
  auto st = run_chain(torus, {"tree_size", "density", "density_avg", "conn_avg:1_0", "conn_avg:0_0"},
                      params(300000, 1000));
  check_within(st.summary("tree_size"), exact_t0);
  check_within(st.summary("density"), exact_t0 / 9.0);
  check_within(st.summary("density_avg"), exact_t0 / 9.0);
  check_within(st.summary("conn_avg:1_0"), connection_matrix(torus)(0, 1));
  CHECK(st.summary("conn_avg:0_0").mean == 1.0);
}

TEST_CASE("seed determinism and implementation independence") {
  auto g = build_torus<double>(4, 2, 1.0);
  auto obs = parse_observables(g, {"tree_size", "num_trees", "edge:3", "conn:5"});
  auto p = params(3000, 100, 1234);
  auto a = run_chain<LinkCutTree>(g, obs, p);
  auto b = run_chain<LinkCutTree>(g, obs, p);
  auto c = run_chain<RebuildUnionFind>(g, obs, p);
  for (std::size_t k = 0; k < obs.size(); ++k) {
    CHECK(a.summary(k).mean == b.summary(k).mean);
    CHECK(a.summary(k).stderr_mean == b.summary(k).stderr_mean);
    CHECK(a.summary(k).mean == c.summary(k).mean);
    CHECK(a.summary(k).stderr_mean == c.summary(k).stderr_mean);
  }
  p.seed = 1235;
  auto d = run_chain<LinkCutTree>(g, obs, p);
  CHECK(d.summary(0).mean != a.summary(0).mean);
}

TEST_CASE("ensembles merge in chain order") {
  auto g = build_torus<double>(3, 2, 1.0);
  auto obs = parse_observables(g, {"tree_size"});
  auto p = params(2000, 100, 99);
  p.chains = 3;
  auto all = run_chain(g, obs, p);
  ChainStats manual = run_single_chain(g, obs, p, 0);
  manual.merge(run_single_chain(g, obs, p, 1));
  manual.merge(run_single_chain(g, obs, p, 2));
  CHECK(all.chains == 3);
  CHECK(all.summary(0).samples == 3 * 1900);
  CHECK(all.summary(0).mean == manual.summary(0).mean);
  CHECK(all.summary(0).stderr_mean == manual.summary(0).stderr_mean);
}

TEST_CASE("observable parsing errors") {
  auto g = build_torus<double>(4, 2, 1.0);
  CHECK_THROWS_AS(parse_observables(g, {"magnetization"}), std::invalid_argument);
  CHECK_THROWS_AS(parse_observables(g, {"conn:16"}), std::out_of_range);
  CHECK_THROWS_AS(parse_observables(g, {"edge:x"}), std::invalid_argument);
  CHECK_THROWS_AS(parse_observables(g, {"conn_avg:4_0"}), std::out_of_range);
  CHECK_THROWS_AS(parse_observables(g, {"conn_avg:1"}), std::invalid_argument);
  CHECK_THROWS_AS(parse_observables(build_complete<double>(4, 1.0), {"conn_avg:1_0"}), std::invalid_argument);
  CHECK_THROWS_AS(run_chain(g, {"tree_size"}, params(10, 10)), std::invalid_argument);
  auto rot = parse_observables(g, {"conn_avg:1_0"});
  CHECK(rot[0].shifts.size() == 2);
  CHECK(parse_observables(g, {"conn_avg:1_1"})[0].shifts.size() == 1);
}

TEST_CASE("two-point estimates and trace dump") {
  auto g = build_torus<double>(3, 2, 1.0);
  auto exact = connection_matrix(g);
  auto p = params(100000, 1000);
  auto rows = estimate_two_point(g, {{0, 0}, {1, 0}, {1, 1}}, p);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].estimate.mean == 1.0);
  check_within(rows[1].estimate, exact(0, torus_vertex(std::vector<int>{1, 0}, 3)));
  check_within(rows[2].estimate, exact(0, torus_vertex(std::vector<int>{1, 1}, 3)));
  check_within(estimate_density(g, p), expected_tree_size(g, 0) / 9.0);

  auto path = (std::filesystem::temp_directory_path() / "arbor_trace_test.bin").string();
  auto tp = params(150, 50);
  tp.trace_path = path;
  auto s = run_chain(g, {"tree_size", "num_trees"}, tp);
  CHECK(std::filesystem::file_size(path) == 100 * 2 * 8);
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  REQUIRE(fp);
  double sum = 0.0, x[2];
  while (std::fread(x, sizeof(double), 2, fp) == 2) sum += x[0];
  std::fclose(fp);
  CHECK(sum / 100 == doctest::Approx(s.summary("tree_size").mean).epsilon(1e-12));
  std::filesystem::remove(path);
}

TEST_CASE("log-log slope") {
  std::vector<double> r{1, 2, 4, 8}, p;
  for (double x : r) p.push_back(0.5 * std::pow(x, -0.7));
  CHECK(log_log_slope(r, p) == doctest::Approx(-0.7));
}
