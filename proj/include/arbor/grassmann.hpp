#pragma once

#include "arbor/graph.hpp"
#include "arbor/scalar.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace arbor {

/// Monomial over generators xi_0, eta_0, xi_1, eta_1, ...: bit 2i is xi_i,
/// bit 2i+1 is eta_i. A monomial is stored in ascending generator order.
using Monomial = std::uint64_t;

inline constexpr std::size_t max_form_vertices = 32;

constexpr Monomial xi_bit(std::size_t i) { return Monomial{1} << (2 * i); }
constexpr Monomial eta_bit(std::size_t i) { return Monomial{1} << (2 * i + 1); }
constexpr Monomial pair_bits(std::size_t i) { return xi_bit(i) | eta_bit(i); }

/// Sign of the canonical reordering of (a)(b); 0 if they share a generator.
inline int monomial_product_sign(Monomial a, Monomial b) {
  if (a & b) return 0;
  int swaps = 0;
  for (Monomial rest = b; rest; rest &= rest - 1) {
    int y = std::countr_zero(rest);
    swaps += std::popcount(y == 63 ? Monomial{0} : a >> (y + 1));
  }
  return (swaps & 1) ? -1 : 1;
}

/// Sign produced by moving generator g to the front of monomial m.
inline int front_sign(Monomial m, int g) {
  Monomial below = m & ((Monomial{1} << g) - 1);
  return (std::popcount(below) & 1) ? -1 : 1;
}

/// Element of the Grassmann algebra on 2N generators. Zero coefficients are
/// never stored.
template <Scalar S>
class GrassmannForm {
 public:
  using Terms = std::map<Monomial, S>;

  explicit GrassmannForm(std::size_t n_vertices = 0) : n_(n_vertices) {
    if (n_ > max_form_vertices) throw std::invalid_argument("GrassmannForm: too many vertices");
  }

  static GrassmannForm constant(std::size_t n, const S& c) {
    GrassmannForm f(n);
    f.add_term(0, c);
    return f;
  }
  static GrassmannForm one(std::size_t n) { return constant(n, S(1)); }
  static GrassmannForm generator(std::size_t n, int bit) {
    GrassmannForm f(n);
    f.add_term(Monomial{1} << bit, S(1));
    return f;
  }
  static GrassmannForm xi(std::size_t n, std::size_t i) { return generator(n, static_cast<int>(2 * i)); }
  static GrassmannForm eta(std::size_t n, std::size_t i) { return generator(n, static_cast<int>(2 * i + 1)); }
  /// z_i = 1 - xi_i eta_i.
  static GrassmannForm z(std::size_t n, std::size_t i) {
    GrassmannForm f = one(n);
    f.add_term(pair_bits(i), S(-1));
    return f;
  }
  /// u_i . u_j = -xi_i eta_j - xi_j eta_i - z_i z_j.
  static GrassmannForm inner(std::size_t n, std::size_t i, std::size_t j) {
    return xi(n, i) * eta(n, j) * S(-1) - xi(n, j) * eta(n, i) - z(n, i) * z(n, j);
  }

  std::size_t n_vertices() const { return n_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  S coefficient(Monomial m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? S(0) : it->second;
  }
  S constant_term() const { return coefficient(0); }

  bool is_even() const {
    for (const auto& [m, c] : terms_)
      if (std::popcount(m) & 1) return false;
    return true;
  }
  bool is_odd() const {
    for (const auto& [m, c] : terms_)
      if (!(std::popcount(m) & 1)) return false;
    return true;
  }

  void add_term(Monomial m, const S& c) {
    if (c == 0) return;
    if (n_ < max_form_vertices && (m >> (2 * n_)) != 0)
      throw std::invalid_argument("GrassmannForm: monomial outside the generator universe");
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0) terms_.erase(it);
    }
  }

  GrassmannForm& operator+=(const GrassmannForm& o) {
    check_universe(o);
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }
  GrassmannForm& operator-=(const GrassmannForm& o) {
    check_universe(o);
    for (const auto& [m, c] : o.terms_) add_term(m, -c);
    return *this;
  }
  GrassmannForm& operator*=(const S& c) {
    if (c == 0) {
      terms_.clear();
      return *this;
    }
    for (auto& [m, x] : terms_) x *= c;
    return *this;
  }

  friend GrassmannForm operator+(GrassmannForm a, const GrassmannForm& b) { return a += b; }
  friend GrassmannForm operator-(GrassmannForm a, const GrassmannForm& b) { return a -= b; }
  friend GrassmannForm operator*(GrassmannForm a, const S& c) { return a *= c; }
  friend GrassmannForm operator*(const S& c, GrassmannForm a) { return a *= c; }

  friend GrassmannForm operator*(const GrassmannForm& a, const GrassmannForm& b) {
    a.check_universe(b);
    GrassmannForm out(a.n_);
    for (const auto& [ma, ca] : a.terms_)
      for (const auto& [mb, cb] : b.terms_) {
        int s = monomial_product_sign(ma, mb);
        if (s == 0) continue;
        out.add_term(ma | mb, s > 0 ? ca * cb : -(ca * cb));
      }
    return out;
  }

  bool operator==(const GrassmannForm& o) const { return n_ == o.n_ && terms_ == o.terms_; }

  /// One line per term: "mask_hex coefficient", ascending mask.
  void dump(std::ostream& out) const {
    for (const auto& [m, c] : terms_) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%llx", static_cast<unsigned long long>(m));
      out << buf << ' ' << to_string(c) << '\n';
    }
  }

 private:
  void check_universe(const GrassmannForm& o) const {
    if (o.n_ != n_) throw std::invalid_argument("GrassmannForm: generator universe mismatch");
  }

  std::size_t n_;
  Terms terms_;
};

/// exp of an even form by its truncating power series. For Rational
/// coefficients the degree-0 part must vanish (e^c is not rational).
template <Scalar S>
GrassmannForm<S> exp_even(const GrassmannForm<S>& a) {
  if (!a.is_even()) throw std::invalid_argument("exp_even: form is not even");
  S c0 = a.constant_term();
  GrassmannForm<S> nil = a;
  nil.add_term(0, -c0);
  GrassmannForm<S> sum = GrassmannForm<S>::one(a.n_vertices());
  GrassmannForm<S> power = sum;
  for (long k = 1; !power.is_zero(); ++k) {
    power = power * nil;
    power *= S(1) / S(k);
    sum += power;
  }
  if (c0 != 0) {
    if constexpr (is_rational_v<S>)
      throw std::domain_error("exp_even: nonzero constant term has no rational exponential");
    else
      sum *= std::exp(c0);
  }
  return sum;
}

/// Left derivative with respect to the generator at `bit`.
template <Scalar S>
GrassmannForm<S> derivative(const GrassmannForm<S>& f, int bit) {
  GrassmannForm<S> out(f.n_vertices());
  const Monomial g = Monomial{1} << bit;
  for (const auto& [m, c] : f.terms()) {
    if (!(m & g)) continue;
    out.add_term(m & ~g, front_sign(m, bit) > 0 ? c : -c);
  }
  return out;
}

template <Scalar S>
GrassmannForm<S> derivative_xi(const GrassmannForm<S>& f, std::size_t a) {
  return derivative(f, static_cast<int>(2 * a));
}
template <Scalar S>
GrassmannForm<S> derivative_eta(const GrassmannForm<S>& f, std::size_t a) {
  return derivative(f, static_cast<int>(2 * a + 1));
}

/// T_a = z_a d/dxi_a.
template <Scalar S>
GrassmannForm<S> apply_T(const GrassmannForm<S>& f, std::size_t a) {
  return GrassmannForm<S>::z(f.n_vertices(), a) * derivative_xi(f, a);
}
/// Tbar_a = z_a d/deta_a.
template <Scalar S>
GrassmannForm<S> apply_Tbar(const GrassmannForm<S>& f, std::size_t a) {
  return GrassmannForm<S>::z(f.n_vertices(), a) * derivative_eta(f, a);
}
/// S_a = eta_a d/dxi_a + xi_a d/deta_a.
template <Scalar S>
GrassmannForm<S> apply_S(const GrassmannForm<S>& f, std::size_t a) {
  const auto n = f.n_vertices();
  return GrassmannForm<S>::eta(n, a) * derivative_xi(f, a) + GrassmannForm<S>::xi(n, a) * derivative_eta(f, a);
}

template <Scalar S, class Op>
GrassmannForm<S> sum_over_vertices(const GrassmannForm<S>& f, Op op) {
  GrassmannForm<S> out(f.n_vertices());
  for (std::size_t a = 0; a < f.n_vertices(); ++a) out += op(f, a);
  return out;
}

template <Scalar S>
GrassmannForm<S> apply_T(const GrassmannForm<S>& f) {
  return sum_over_vertices(f, [](const auto& g, std::size_t a) { return apply_T(g, a); });
}
template <Scalar S>
GrassmannForm<S> apply_Tbar(const GrassmannForm<S>& f) {
  return sum_over_vertices(f, [](const auto& g, std::size_t a) { return apply_Tbar(g, a); });
}
template <Scalar S>
GrassmannForm<S> apply_S(const GrassmannForm<S>& f) {
  return sum_over_vertices(f, [](const auto& g, std::size_t a) { return apply_S(g, a); });
}

namespace detail {

/// Applies d/deta_v d/dxi_v after multiplying by (1 + w xi_v eta_v), for a
/// form whose remaining factors do not involve vertex v. The pair xi_v eta_v
/// is even, so extracting it costs no sign.
template <Scalar S>
GrassmannForm<S> eliminate_vertex(const GrassmannForm<S>& f, std::size_t v, const S& w) {
  GrassmannForm<S> out(f.n_vertices());
  const Monomial pair = pair_bits(v);
  for (const auto& [m, c] : f.terms()) {
    Monomial hit = m & pair;
    if (hit == pair)
      out.add_term(m & ~pair, c);
    else if (hit == 0 && w != 0)
      out.add_term(m, c * w);
  }
  return out;
}

/// Integrates f times a product of even edge factors over the listed
/// vertices, eliminating each vertex as soon as its last factor is in.
/// `diag[v]` is the coefficient of xi_v eta_v in that vertex's own factor.
template <Scalar S>
GrassmannForm<S> integrate_with_factors(GrassmannForm<S> f, const std::vector<std::pair<std::size_t, std::size_t>>& ends,
                                        const std::vector<GrassmannForm<S>>& factors, const std::vector<S>& diag,
                                        const std::vector<char>& integrate) {
  const std::size_t n = f.n_vertices();
  std::vector<long> last(n, -1);
  for (std::size_t k = 0; k < ends.size(); ++k) {
    last[ends[k].first] = static_cast<long>(k);
    last[ends[k].second] = static_cast<long>(k);
  }
  for (std::size_t v = 0; v < n; ++v)
    if (integrate[v] && last[v] < 0) f = eliminate_vertex(f, v, diag[v]);
  for (std::size_t k = 0; k < factors.size(); ++k) {
    f = f * factors[k];
    for (std::size_t v : {ends[k].first, ends[k].second})
      if (integrate[v] && last[v] == static_cast<long>(k)) {
        f = eliminate_vertex(f, v, diag[v]);
        last[v] = -2;
      }
  }
  return f;
}

}  // namespace detail

/// Hyperbolic fermionic integral [F]_0 = prod_i d/deta_i d/dxi_i (1/z_i) F,
/// with 1/z_i = 1 + xi_i eta_i.
template <Scalar S>
S hyperbolic_integral(const GrassmannForm<S>& f) {
  GrassmannForm<S> g = f;
  for (std::size_t v = 0; v < f.n_vertices(); ++v) g = detail::eliminate_vertex(g, v, S(1));
  return g.constant_term();
}

/// Flat Berezin integral prod_i d/deta_i d/dxi_i F (top coefficient).
template <Scalar S>
S berezin_integral(const GrassmannForm<S>& f) {
  const std::size_t n = f.n_vertices();
  const Monomial top = n == max_form_vertices ? ~Monomial{0} : (Monomial{1} << (2 * n)) - 1;
  return f.coefficient(top);
}

/// Edge factor 1 + beta (u_i . u_j + 1), the exponential of beta (u_i.u_j + 1).
template <Scalar S>
GrassmannForm<S> h02_edge_factor(std::size_t n, std::size_t i, std::size_t j, const S& beta) {
  auto x = GrassmannForm<S>::inner(n, i, j) + GrassmannForm<S>::one(n);
  return exp_even(x * beta);
}

/// H_{beta,h} = 1/2 (u, -Delta u) + (h, z - 1) = -sum_e beta_e (u_i.u_j + 1) - sum_i h_i xi_i eta_i.
template <Scalar S>
GrassmannForm<S> h02_action(const BasicGraph<S>& g) {
  const std::size_t n = g.n_vertices();
  GrassmannForm<S> h(n);
  for (const auto& e : g.edges()) h -= (GrassmannForm<S>::inner(n, e.i, e.j) + GrassmannForm<S>::one(n)) * e.beta;
  for (std::size_t i = 0; i < n; ++i) h.add_term(pair_bits(i), -g.vertex_weights()[i]);
  return h;
}

struct FormOptions {
  std::size_t max_vertices = 12;
};

inline void check_form_cap(std::size_t n, const FormOptions& opts) {
  if (n > opts.max_vertices || n > max_form_vertices)
    throw std::length_error("Grassmann computation refused: " + std::to_string(n) + " vertices exceeds cap " +
                            std::to_string(opts.max_vertices));
}

/// Unnormalised expectation [F]_{beta,h} = [F e^{-H_{beta,h}}]_0.
template <Scalar S>
S h02_expectation(const GrassmannForm<S>& f, const BasicGraph<S>& g, FormOptions opts = {}) {
  const std::size_t n = g.n_vertices();
  check_form_cap(n, opts);
  if (f.n_vertices() != n) throw std::invalid_argument("h02_expectation: form universe does not match graph");
  std::vector<std::pair<std::size_t, std::size_t>> ends;
  std::vector<GrassmannForm<S>> factors;
  for (const auto& e : g.edges()) {
    ends.emplace_back(e.i, e.j);
    factors.push_back(h02_edge_factor<S>(n, e.i, e.j, e.beta));
  }
  std::vector<S> diag(n);
  for (std::size_t v = 0; v < n; ++v) diag[v] = S(1) + g.vertex_weights()[v];
  auto out = detail::integrate_with_factors(f, ends, factors, diag, std::vector<char>(n, 1));
  return out.constant_term();
}

/// [1]_{beta,h}.
template <Scalar S>
S h02_partition(const BasicGraph<S>& g, FormOptions opts = {}) {
  return h02_expectation(GrassmannForm<S>::one(g.n_vertices()), g, opts);
}

template <Scalar S>
struct PinnedResult {
  /// Drop the pin's generators, move beta_{pin,j} into h_j, integrate the rest.
  S substitution;
  /// [(1 - z_pin) F]_{beta,h} on the full vertex set.
  S projection;
  bool agree() const { return substitution == projection; }
};

/// Pinned expectation [F]^pin_beta computed two ways.
template <Scalar S>
PinnedResult<S> pinned_expectation(const GrassmannForm<S>& f, const BasicGraph<S>& g, VertexId pin = 0,
                                   FormOptions opts = {}) {
  const std::size_t n = g.n_vertices();
  check_form_cap(n, opts);
  if (!g.is_connected()) throw std::invalid_argument("pinned_expectation: graph is disconnected");
  if (pin >= n) throw std::out_of_range("pinned_expectation: pin out of range");
  GrassmannForm<S> reduced(n);
  for (const auto& [m, c] : f.terms())
    if (!(m & pair_bits(pin))) reduced.add_term(m, c);
  std::vector<S> diag(n);
  for (std::size_t v = 0; v < n; ++v) diag[v] = S(1) + g.vertex_weights()[v];
  std::vector<std::pair<std::size_t, std::size_t>> ends;
  std::vector<GrassmannForm<S>> factors;
  for (const auto& e : g.edges()) {
    if (e.i == pin || e.j == pin) {
      diag[e.i == pin ? e.j : e.i] += e.beta;
      continue;
    }
    ends.emplace_back(e.i, e.j);
    factors.push_back(h02_edge_factor<S>(n, e.i, e.j, e.beta));
  }
  std::vector<char> integrate(n, 1);
  integrate[pin] = 0;
  auto sub = detail::integrate_with_factors(reduced, ends, factors, diag, integrate);
  PinnedResult<S> r;
  r.substitution = sub.constant_term();
  auto one_minus_z = GrassmannForm<S>::one(n) - GrassmannForm<S>::z(n, pin);
  r.projection = h02_expectation(one_minus_z * f, g, opts);
  return r;
}

/// Edge factor exp(beta (xi_i - xi_j)(eta_i - eta_j)).
template <Scalar S>
GrassmannForm<S> fgff_edge_factor(std::size_t n, std::size_t i, std::size_t j, const S& beta) {
  using F = GrassmannForm<S>;
  auto dx = F::xi(n, i) - F::xi(n, j);
  auto de = F::eta(n, i) - F::eta(n, j);
  return exp_even(dx * de * beta);
}

/// Fermionic Gaussian free field: prod d/deta d/dxi of
/// exp[(xi, -Delta_beta eta) + (h, xi eta)] F. With this sign [1] equals
/// det(L_beta + diag h), the rooted spanning forest sum.
template <Scalar S>
S fgff_expectation(const GrassmannForm<S>& f, const BasicGraph<S>& g, const std::vector<S>& h, FormOptions opts = {}) {
  const std::size_t n = g.n_vertices();
  check_form_cap(n, opts);
  if (f.n_vertices() != n) throw std::invalid_argument("fgff_expectation: form universe does not match graph");
  if (h.size() != n) throw std::invalid_argument("fgff_expectation: field length mismatch");
  std::vector<std::pair<std::size_t, std::size_t>> ends;
  std::vector<GrassmannForm<S>> factors;
  for (const auto& e : g.edges()) {
    ends.emplace_back(e.i, e.j);
    factors.push_back(fgff_edge_factor<S>(n, e.i, e.j, e.beta));
  }
  return detail::integrate_with_factors(f, ends, factors, h, std::vector<char>(n, 1)).constant_term();
}

/// Normalised expectation under the fGFF pinned at `pin` (h = 0 and a
/// factor xi_pin eta_pin): the uniform spanning tree.
template <Scalar S>
S fgff_pinned_average(const GrassmannForm<S>& f, const BasicGraph<S>& g, VertexId pin = 0, FormOptions opts = {}) {
  const std::size_t n = g.n_vertices();
  std::vector<S> zero(n, S(0));
  auto pinf = GrassmannForm<S>::xi(n, pin) * GrassmannForm<S>::eta(n, pin);
  S norm = fgff_expectation(pinf, g, zero, opts);
  if (norm == 0) throw std::invalid_argument("fgff_pinned_average: graph is disconnected");
  return fgff_expectation(pinf * f, g, zero, opts) / norm;
}

/// (xi_i - xi_j)(eta_k - eta_l).
template <Scalar S>
GrassmannForm<S> gradient_pair(std::size_t n, std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
  using F = GrassmannForm<S>;
  return (F::xi(n, i) - F::xi(n, j)) * (F::eta(n, k) - F::eta(n, l));
}

/// UST edge-set probability via the pinned fGFF.
template <Scalar S>
S fgff_ust_probability(const BasicGraph<S>& g, const std::vector<std::size_t>& edge_set, FormOptions opts = {}) {
  const std::size_t n = g.n_vertices();
  auto f = GrassmannForm<S>::one(n);
  for (auto k : edge_set) {
    const auto& e = g.edge(k);
    f = f * (gradient_pair<S>(n, e.i, e.j, e.i, e.j) * e.beta);
  }
  return fgff_pinned_average(f, g, 0, opts);
}

/// -beta_ij beta_kl <(xi_i - xi_j)(eta_k - eta_l)> <(xi_k - xi_l)(eta_i - eta_j)>.
template <Scalar S>
S fgff_ust_deficit(const BasicGraph<S>& g, std::size_t e1, std::size_t e2, FormOptions opts = {}) {
  if (e1 == e2) throw std::invalid_argument("fgff_ust_deficit: edges must be distinct");
  const std::size_t n = g.n_vertices();
  const auto& a = g.edge(e1);
  const auto& b = g.edge(e2);
  S x = fgff_pinned_average(gradient_pair<S>(n, a.i, a.j, b.i, b.j), g, 0, opts);
  S y = fgff_pinned_average(gradient_pair<S>(n, b.i, b.j, a.i, a.j), g, 0, opts);
  return -a.beta * b.beta * x * y;
}

}  // namespace arbor
