#include "doctest.h"

#include "arbor/exact.hpp"
#include "arbor/grassmann.hpp"
#include "oracles.hpp"

#include <random>
#include <sstream>

using namespace arbor;
using Form = GrassmannForm<Rational>;

namespace {

Rational q(long a, long b = 1) { return make_rational(a, b); }

Form random_form(std::size_t n, std::mt19937_64& rng, int n_terms) {
  Form f(n);
  std::uniform_int_distribution<Monomial> mono(0, (Monomial{1} << (2 * n)) - 1);
  std::uniform_int_distribution<long> num(-9, 9), den(1, 6);
  for (int k = 0; k < n_terms; ++k) f.add_term(mono(rng), make_rational(num(rng), den(rng)));
  return f;
}

/// Literal definition: multiply by prod (1 + xi eta) and read the top coefficient.
Rational literal_hyperbolic(const Form& f) {
  Form g = f;
  for (std::size_t i = 0; i < f.n_vertices(); ++i) g = g * (Form::one(f.n_vertices()) - Form::z(f.n_vertices(), i) + Form::one(f.n_vertices()));
  return berezin_integral(g);
}

/// Literal definition of [F]_{beta,h}: build e^{-H} and integrate.
Rational literal_expectation(const Form& f, const RationalGraph& g) {
  Form weight = exp_even(h02_action(g) * Rational(-1));
  return literal_hyperbolic(f * weight);
}

}  // namespace

TEST_CASE("anticommutation and nilpotency") {
  auto x1 = Form::xi(2, 0), e1 = Form::eta(2, 0);
  CHECK((x1 * x1).is_zero());
  auto xe = x1 * e1;
  CHECK(xe.coefficient(pair_bits(0)) == 1);
  CHECK((e1 * x1).coefficient(pair_bits(0)) == -1);
  auto z = Form::z(2, 0);
  auto zz = z * z;
  CHECK(zz.constant_term() == 1);
  CHECK(zz.coefficient(pair_bits(0)) == -2);
  CHECK(zz.terms().size() == 2);
  auto x2 = Form::xi(2, 1);
  CHECK((x2 * x1).coefficient(xi_bit(0) | xi_bit(1)) == -1);
  CHECK_THROWS(Form::xi(2, 0) * Form::xi(3, 0));
}

TEST_CASE("exp of even forms") {
  CHECK(exp_even(Form(2)) == Form::one(2));
  auto a = Form::xi(2, 0) * Form::eta(2, 0) * q(5, 2);
  CHECK(exp_even(a) == Form::one(2) + a);
  auto p1 = Form::xi(2, 0) * Form::eta(2, 0), p2 = Form::xi(2, 1) * Form::eta(2, 1);
  CHECK(exp_even(p1 + p2) == Form::one(2) + p1 + p2 + p1 * p2);
  CHECK_THROWS(exp_even(Form::xi(2, 0)));
  CHECK_THROWS(exp_even(Form::one(2)));
  GrassmannForm<double> d = GrassmannForm<double>::one(1);
  CHECK(exp_even(d).constant_term() == doctest::Approx(std::exp(1.0)));
}

TEST_CASE("hyperbolic integral: normalisation, trees and cycles") {
  CHECK(hyperbolic_integral(Form::one(3)) == 1);
  CHECK(hyperbolic_integral(Form::inner(2, 0, 1) + Form::one(2)) == 1);
  auto tri = Form::one(3);
  for (auto [i, j] : {std::pair{0, 1}, {1, 2}, {0, 2}}) tri = tri * (Form::inner(3, i, j) + Form::one(3));
  CHECK(hyperbolic_integral(tri) == 0);
  auto path = (Form::inner(3, 0, 1) + Form::one(3)) * (Form::inner(3, 1, 2) + Form::one(3));
  CHECK(hyperbolic_integral(path) == 1);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    auto f = random_form(3, rng, 12);
    CHECK(hyperbolic_integral(f) == literal_hyperbolic(f));
  }
}

TEST_CASE("expansion of the Gaussian weight over forests") {
  std::mt19937_64 rng(17);
  for (const auto& shape : small_graph_corpus(4)) {
    auto g = random_rational_weights(shape, rng, false);
    const std::size_t n = g.n_vertices();
    Form lhs = exp_even(h02_action(g) * Rational(-1));
    Form rhs(n);
    for (const auto& [mask, root] : oracle::forests(g).forests) {
      Form term = Form::one(n);
      for (std::size_t k = 0; k < g.n_edges(); ++k)
        if ((mask >> k) & 1) term = term * ((Form::inner(n, g.edge(k).i, g.edge(k).j) + Form::one(n)) * g.edge(k).beta);
      rhs += term;
    }
    CHECK(lhs == rhs);
  }
}

TEST_CASE("h02 partition equals the forest partition function") {
  CHECK(h02_partition(build_complete<Rational>(3, Rational(3))) == 7);
  RationalGraph edge(2, {{0, 1, q(2), 1}});
  CHECK(h02_partition(edge) == 3);
  std::mt19937_64 rng(23);
  for (const auto& shape : small_graph_corpus(5)) {
    auto g = random_rational_weights(shape, rng, true);
    CHECK(h02_partition(g) == oracle::partition(g));
  }
  for (const auto& shape : connected_graphs(3)) {
    auto g = random_rational_weights(shape, rng, true);
    CHECK(h02_expectation(Form::one(3), g) == literal_expectation(Form::one(3), g));
    auto f = Form::z(3, 0) * Form::xi(3, 1) * Form::eta(3, 2);
    CHECK(h02_expectation(f, g) == literal_expectation(f, g));
  }
  CHECK_THROWS_AS(h02_partition(build_torus<Rational>(4, 2, Rational(1))), std::length_error);
}

TEST_CASE("spin correlations give connection probabilities") {
  std::mt19937_64 rng(29);
  for (const auto& shape : small_graph_corpus(4)) {
    auto g = random_rational_weights(shape, rng, false);
    const std::size_t n = g.n_vertices();
    Rational z = h02_partition(g);
    for (std::size_t a = 0; a < n; ++a) {
      CHECK(h02_expectation(Form::z(n, a), g) == 0);
      for (std::size_t b = 0; b < n; ++b) {
        if (a == b) continue;
        Rational p = oracle::connection(g, static_cast<int>(a), static_cast<int>(b));
        CHECK(-h02_expectation(Form::z(n, a) * Form::z(n, b), g) / z == p);
        CHECK(h02_expectation(Form::xi(n, a) * Form::eta(n, b), g) / z == p);
      }
    }
  }
}

TEST_CASE("derivations") {
  const std::size_t n = 2;
  CHECK(apply_T(Form::xi(n, 0)) == Form::z(n, 0));
  CHECK(apply_T(Form::eta(n, 0)).is_zero());
  CHECK(apply_T(Form::z(n, 0)) == Form::eta(n, 0) * Rational(-1));
  CHECK(apply_Tbar(Form::eta(n, 0)) == Form::z(n, 0));
  CHECK(apply_Tbar(Form::z(n, 0)) == Form::xi(n, 0));
  auto uu = Form::inner(n, 0, 1);
  CHECK(apply_T(uu).is_zero());
  CHECK(apply_Tbar(uu).is_zero());
  CHECK(apply_S(uu).is_zero());
  auto x1x2 = Form::xi(n, 0) * Form::xi(n, 1);
  CHECK(apply_S(x1x2) == Form::xi(n, 0) * Form::eta(n, 1) - Form::xi(n, 1) * Form::eta(n, 0));
}

TEST_CASE("Ward identities") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 1 + trial % 4;
    auto f = random_form(n, rng, 10);
    for (std::size_t a = 0; a < n; ++a) {
      CHECK(hyperbolic_integral(apply_T(f, a)) == 0);
      CHECK(hyperbolic_integral(apply_Tbar(f, a)) == 0);
      CHECK(hyperbolic_integral(apply_S(f, a)) == 0);
    }
    if (n >= 2) {
      auto shapes = connected_graphs(n);
      auto g = random_rational_weights(shapes[trial % shapes.size()], rng, false);
      CHECK(h02_expectation(apply_T(f), g) == 0);
      CHECK(h02_expectation(apply_Tbar(f), g) == 0);
    }
  }
}

TEST_CASE("pinning: substitution and projection agree") {
  RationalGraph edge(2, {{0, 1, q(3, 2), 1}});
  auto one = pinned_expectation(Form::one(2), edge);
  CHECK(one.agree());
  CHECK(one.substitution == h02_partition(edge));
  auto zj = pinned_expectation(Form::z(2, 1), edge);
  CHECK(zj.agree());
  auto spin = pinned_expectation(Form::inner(2, 0, 1) + Form::one(2), edge);
  CHECK(spin.agree());
  CHECK(spin.substitution == h02_expectation(Form::inner(2, 0, 1) + Form::one(2), edge));
  std::mt19937_64 rng(37);
  for (const auto& shape : small_graph_corpus(4)) {
    auto g = random_rational_weights(shape, rng, true);
    auto f = random_form(g.n_vertices(), rng, 8);
    CHECK(pinned_expectation(f, g).agree());
  }
  RationalGraph split(3, {{0, 1, q(1), 1}});
  CHECK_THROWS(pinned_expectation(Form::one(3), split));
}

TEST_CASE("fermionic Gaussian free field") {
  auto k3 = build_complete<Rational>(3, Rational(3));
  CHECK(fgff_expectation(Form::one(3), k3, std::vector<Rational>(3, q(1))) == 16);
  CHECK(fgff_expectation(Form::one(3), k3, std::vector<Rational>(3, q(0))) == 0);
  CHECK(fgff_ust_probability(k3, {0}) == q(2, 3));
  std::mt19937_64 rng(41);
  for (const auto& shape : small_graph_corpus(5)) {
    auto g = random_rational_weights(shape, rng, true);
    const auto& h = g.vertex_weights();
    CHECK(fgff_expectation(Form::one(g.n_vertices()), g, h) == rooted_forest_determinant(g, h));
    if (g.n_edges() >= 2) {
      CHECK(fgff_ust_probability(g, {0, 1}) == ust_enumerated_probability(g, 0b11));
      Rational d = fgff_ust_deficit(g, 0, 1);
      CHECK(d == ust_na_deficit(g, 0, 1));
      CHECK(d <= 0);
    }
  }
}

TEST_CASE("debug dump is ordered by mask") {
  auto f = Form::z(2, 1) * q(-3, 4) + Form::xi(2, 0);
  std::ostringstream out;
  f.dump(out);
  CHECK(out.str() == "0 -3/4\n1 1\nc 3/4\n");
}
