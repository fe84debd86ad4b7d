#include "doctest.h"

#include "arbor/corpus.hpp"
#include "arbor/exact.hpp"
#include "arbor/horospherical.hpp"
#include "oracles.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

using namespace arbor;

namespace {

constexpr double kPi = std::numbers::pi;

WeightedGraph single_edge(double beta) { return WeightedGraph(2, {{0, 1, beta, 1}}); }

/// beta_ij e^{t_i + t_j} as plain edge weights, for the tree-sum oracle.
WeightedGraph tilted(const WeightedGraph& g, const std::vector<double>& t) {
  auto edges = g.edges();
  for (auto& e : edges) e.beta *= std::exp(t[e.i] + t[e.j]);
  return WeightedGraph(g.n_vertices(), edges);
}

double integrate_line(const std::function<double(double)>& f) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -12.0, 12.0, 12, 1e-13);
}

MalaParams mala(std::uint64_t steps, std::uint64_t burn_in, std::uint64_t seed = 3) {
  MalaParams p;
  p.steps = steps;
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

TEST_CASE("reduced determinant counts weighted spanning trees") {
  auto k3 = build_complete<double>(3, 3.0);
  CHECK(reduced_det(k3, {0, 0, 0}).value == doctest::Approx(3.0));
  CHECK(reduced_det(single_edge(2.5), {0, 0}).value == doctest::Approx(2.5));

  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal(0.0, 0.7);
  std::vector<double> t{0.0, normal(rng), normal(rng)};
  double trees = std::exp(2 * t[0] + t[1] + t[2]) + std::exp(t[0] + 2 * t[1] + t[2]) + std::exp(t[0] + t[1] + 2 * t[2]);
  CHECK(reduced_det(k3, t).value == doctest::Approx(trees).epsilon(1e-12));
  // The pin does not change the determinant.
  CHECK(reduced_det(k3, t, 2).value == doctest::Approx(trees).epsilon(1e-12));

  for (const auto& shape : small_graph_corpus()) {
    auto rg = random_rational_weights(shape, rng, false);
    auto g = convert_graph<double>(rg);
    std::vector<double> tt(g.n_vertices());
    for (auto& x : tt) x = normal(rng);
    CHECK(reduced_det(g, std::vector<double>(g.n_vertices(), 0.0)).value ==
          doctest::Approx(to_double(oracle::spanning_tree_sum(rg))).epsilon(1e-12));
    auto r = reduced_det(g, tt);
    CHECK(r.value == doctest::Approx(oracle::spanning_tree_sum(tilted(g, tt))).epsilon(1e-11));
    CHECK(r.log_value == doctest::Approx(std::log(r.value)).epsilon(1e-12));
  }

  WeightedGraph split(4, {{0, 1, 1.0, 1}, {2, 3, 1.0, 1}});
  CHECK_THROWS_AS(reduced_det(split, {0, 0, 0, 0}), std::invalid_argument);
}

TEST_CASE("energy at the origin and symmetry of its gradient") {
  auto torus = build_torus<double>(3, 2, 1.0);
  std::vector<double> zero(9, 0.0);
  CHECK(htilde0(torus, zero) == doctest::Approx(-1.5 * reduced_det(torus, zero).log_value).epsilon(1e-13));
  auto grad = grad_htilde0(torus, zero);
  REQUIRE(grad.size() == 8);
  for (double gk : grad) CHECK(gk == doctest::Approx(grad[0]).epsilon(1e-12));
  // Each component is 2a - a * sum_{e at k} R_e; on an edge-transitive graph
  // Foster's theorem gives R_e = (n - 1) / m = 8/18 for every edge.
  CHECK(grad[0] == doctest::Approx(3.0 - 1.5 * 4 * (8.0 / 18.0)).epsilon(1e-12));
  std::vector<double> bad(9, 0.0);
  bad[0] = 0.1;
  CHECK_THROWS_AS(htilde0(torus, bad), std::invalid_argument);
}

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> normal(0.0, 0.5);
  auto corpus = small_graph_corpus();
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    WeightedGraph g;
    if (trial < 15) {
      const auto& shape = corpus[1 + (trial * 7) % (corpus.size() - 1)];
      g = convert_graph<double>(random_rational_weights(shape, rng, false));
    } else {
      g = build_torus<double>(3 + trial % 2, 2, 0.5 + 0.3 * (trial % 2));
    }
    for (double a : {0.5, 1.0, 1.5}) {
      HoroDensity d(g, 0, a);
      Eigen::VectorXd x(static_cast<Eigen::Index>(d.dim()));
      for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = normal(rng);
      auto grad = d.gradient(x);
      for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double h = 1e-6;
        Eigen::VectorXd xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        const double fd = (d.energy(xp) - d.energy(xm)) / (2 * h);
        INFO("trial " << trial << " a=" << a << " k=" << k);
        CHECK(std::abs(fd - grad[k]) <= 1e-5 * std::max(1.0, std::abs(grad[k])));
        ++checked;
      }
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("single-edge density: normalization and identities by quadrature") {
  for (double beta : {0.3, 1.0, 2.5}) {
    for (double a : {0.5, 1.0, 1.5}) {
      HoroDensity d(single_edge(beta), 0, a);
      auto weight = [&](double t) {
        Eigen::VectorXd x(1);
        x[0] = t;
        return std::exp(-d.energy(x));
      };
      const double Z = integrate_line(weight);
      const double moment = integrate_line([&](double t) { return std::exp(2 * a * t) * weight(t); }) / Z;
      CHECK(moment == doctest::Approx(1.0).epsilon(1e-9));
      if (a == 1.5) {
        CHECK(Z == doctest::Approx(std::sqrt(2 * kPi) * (1 + beta)).epsilon(1e-10));
        const double e1 = integrate_line([&](double t) { return std::exp(t) * weight(t); }) / Z;
        const double e2 = integrate_line([&](double t) { return std::exp(2 * t) * weight(t); }) / Z;
        CHECK(e1 == doctest::Approx(beta / (1 + beta)).epsilon(1e-10));
        CHECK(e2 == doctest::Approx(e1).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("triangle density integrates to 2 pi Z with <e^{t_1}> = P[0<->1]") {
  auto g = build_complete<double>(3, 4.5);  // beta = 3/2
  HoroDensity d(g);
  auto inner = [&](double t1, auto&& f) {
    return integrate_line([&](double t2) {
      Eigen::VectorXd x(2);
      x << t1, t2;
      return f(t1, t2) * std::exp(-d.energy(x));
    });
  };
  auto total = [&](auto&& f) { return integrate_line([&](double t1) { return inner(t1, f); }); };
  const double Z = total([](double, double) { return 1.0; });
  const double e1 = total([](double t1, double) { return std::exp(t1); }) / Z;
  const double e3 = total([](double, double t2) { return std::exp(3 * t2); }) / Z;
  CHECK(Z == doctest::Approx(2 * kPi * partition_function(g)).epsilon(1e-8));
  CHECK(e1 == doctest::Approx(connection_matrix(g)(0, 1)).epsilon(1e-8));
  CHECK(e3 == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("vertex-field form: <e^{t_0}> = <z_0>") {
  WeightedGraph path(2, {{0, 1, 1.0, 1}});
  std::vector<double> h{0.5, 2.0};
  auto d = HoroDensity::with_field(path, h);
  CHECK(d.dim() == 2);
  CHECK(d.pin() == 2);
  auto weight = [&](double t0, double t1) {
    Eigen::VectorXd x(2);
    x << t0, t1;
    return std::exp(-d.energy(x));
  };
  auto total = [&](auto&& f) {
    return integrate_line([&](double t0) { return integrate_line([&](double t1) { return f(t0, t1) * weight(t0, t1); }); });
  };
  const double Z = total([](double, double) { return 1.0; });
  const double z0 = total([](double t0, double) { return std::exp(t0); }) / Z;
  CHECK(Z == doctest::Approx(2 * kPi * partition_function(path.with_vertex_weights(h))).epsilon(1e-8));
  CHECK(z0 == doctest::Approx(z0_expectation(path, h, 0)).epsilon(1e-8));
  CHECK_THROWS_AS(HoroDensity::with_field(path, {0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("conditional moments match one-dimensional quadrature of the energy") {
  // K4 minus an edge plus a pendant vertex: mixed degrees, non-uniform weights.
  WeightedGraph g(5, {{0, 1, 0.7, 1}, {1, 2, 1.3, 1}, {2, 3, 0.4, 1}, {3, 0, 2.1, 1}, {0, 2, 0.9, 1}, {3, 4, 1.6, 1}});
  std::vector<double> h{0.3, 0.0, 1.1, 0.5, 0.2};
  std::mt19937_64 rng(41);
  std::normal_distribution<double> normal(0.0, 0.6);
  for (const auto& density : {HoroDensity(g, 2), HoroDensity(g, 0, 0.5), HoroDensity::with_field(g, h)}) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(density.dim()));
    for (auto& v : x) v = normal(rng);
    std::vector<std::pair<VertexId, int>> requests;
    for (VertexId v = 0; v < 5; ++v)
      for (int p = 1; p <= 3; ++p) requests.emplace_back(v, p);
    auto got = density.conditional_moments(x, requests);
    const double base = density.energy(x);
    for (std::size_t r = 0; r < requests.size(); ++r) {
      const auto [v, p] = requests[r];
      const int k = density.coordinate_of(v);
      if (k < 0) {
        CHECK(got[r] == 1.0);
        continue;
      }
      auto weight = [&](double u) {
        Eigen::VectorXd y = x;
        y[k] = u;
        return std::exp(base - density.energy(y));
      };
      const double num = integrate_line([&](double u) { return std::exp(p * u) * weight(u); });
      const double den = integrate_line(weight);
      INFO("vertex " << v << " power " << p);
      CHECK(got[r] == doctest::Approx(num / den).epsilon(1e-8));
    }
  }
}

TEST_CASE("MALA on a single edge") {
  auto g = single_edge(1.0);
  HoroDensity d(g);
  auto s = mala_chain(d, {"exp1:1", "exp2:1", "exp3:1", "exp1:0", "tree_size"}, mala(200000, 20000));
  check_within(s.summary("exp1:1"), 0.5);
  check_within(s.summary("exp3:1"), 1.0);
  check_within(s.summary("tree_size"), 1.5);
  const auto e1 = s.summary("exp1:1"), e2 = s.summary("exp2:1");
  CHECK(std::abs(e1.mean - e2.mean) <= 3 * std::hypot(e1.stderr_mean, e2.stderr_mean));
  CHECK(s.summary("exp1:0").mean == 1.0);
  REQUIRE(s.acceptance_rate);
  CHECK(*s.acceptance_rate >= 0.45);
  CHECK(*s.acceptance_rate <= 0.65);
  CHECK(s.warnings.empty());
  auto c = estimate_connection_horo(g, 0, 0, mala(1000, 100));
  CHECK(c.mean == 1.0);
  CHECK(c.stderr_mean == 0.0);
}

TEST_CASE("MALA on the triangle and determinism") {
  auto g = build_complete<double>(3, 3.0);
  HoroDensity d(g);
  auto p = mala(100000, 10000, 5);
  auto s = mala_chain(d, {"exp1:1", "exp3:2"}, p);
  check_within(s.summary("exp1:1"), 4.0 / 7.0);
  check_within(s.summary("exp3:2"), 1.0);
  auto again = mala_chain(d, {"exp1:1", "exp3:2"}, p);
  CHECK(again.summary(0).mean == s.summary(0).mean);
  CHECK(again.summary(1).stderr_mean == s.summary(1).stderr_mean);
  CHECK(*again.step_size == *s.step_size);
}

TEST_CASE("MALA reports an untuned step outside the acceptance band") {
  auto g = build_complete<double>(3, 3.0);
  HoroDensity d(g);
  auto p = mala(3000, 100);
  p.step = 20.0;
  p.tune = false;
  auto s = mala_chain(d, {"exp1:1"}, p);
  CHECK(*s.acceptance_rate < 0.05);
  REQUIRE(s.warnings.size() == 1);
  CHECK(s.warnings[0].find("try step") != std::string::npos);
  CHECK_THROWS_AS(mala_chain(d, {"exp4:1"}, p), std::invalid_argument);
  CHECK_THROWS_AS(mala_chain(d, {"exp1:3"}, p), std::out_of_range);
  p.step = 0.0;
  CHECK_THROWS_AS(mala_chain(d, {"exp1:1"}, p), std::invalid_argument);
}

TEST_CASE("Mermin-Wagner inequality on the 3x3 torus") {
  for (double beta : {0.5, 1.0, 2.0})
    for (double h : {0.25, 1.0, 4.0}) {
      auto g = build_torus<double>(3, 2, beta);
      auto r = mw_bound(g, h);
      INFO("beta=" << beta << " h=" << h << " lhs=" << r.lhs << " rhs=" << r.rhs << " conv=" << r.rhs_conventional);
      CHECK(r.exact);
      CHECK(r.holds);
      CHECK(r.rhs_conventional > r.rhs);
    }
  auto g = build_torus<double>(3, 2, 1.0);
  auto big = mw_bound(g, 1e6);
  CHECK(big.lhs == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(big.rhs == doctest::Approx(1.0).epsilon(1e-5));
  CHECK_THROWS_AS(mw_bound(g, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(mw_bound(build_complete<double>(4, 1.0), 1.0), std::invalid_argument);
}

TEST_CASE("Mermin-Wagner: MALA route agrees with the exact route") {
  auto g = build_torus<double>(3, 2, 1.0);
  MwOptions opts;
  opts.force_mala = true;
  opts.mala = mala(60000, 6000, 11);
  auto mc = mw_bound(g, 1.0, opts);
  auto ex = mw_bound(g, 1.0);
  CHECK_FALSE(mc.exact);
  INFO(mc.z0 << " +- " << mc.z0_stderr << " vs " << ex.z0);
  CHECK(std::abs(mc.z0 - ex.z0) <= 3 * mc.z0_stderr);
}

TEST_CASE("partition function increases in every edge weight") {
  std::mt19937_64 rng(31);
  for (const auto& shape : small_graph_corpus(4)) {
    auto g = random_rational_weights(shape, rng, false);
    for (const auto& dz : partition_increments(g, make_rational(1, 100))) CHECK(dz > 0);
  }
}
