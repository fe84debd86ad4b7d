#include "arbor/meanfield.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace arbor {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double near_critical = 0.05;

void check_branch(cplx w) {
  if (w.imag() == 0.0 && w.real() >= 1.0)
    throw std::domain_error("mean-field weight evaluated on the branch cut [1, inf)");
}

/// Truncated power series a + b e + c e^2, enough for second derivatives.
struct Jet {
  cplx a, b, c;

  friend Jet operator+(Jet x, Jet y) { return {x.a + y.a, x.b + y.b, x.c + y.c}; }
  friend Jet operator-(Jet x, Jet y) { return {x.a - y.a, x.b - y.b, x.c - y.c}; }
  friend Jet operator*(Jet x, Jet y) { return {x.a * y.a, x.a * y.b + x.b * y.a, x.a * y.c + x.b * y.b + x.c * y.a}; }
  friend Jet operator*(cplx s, Jet x) { return {s * x.a, s * x.b, s * x.c}; }
  friend Jet operator/(Jet x, Jet y) {
    cplx q0 = x.a / y.a;
    cplx q1 = (x.b - q0 * y.b) / y.a;
    cplx q2 = (x.c - q0 * y.c - q1 * y.b) / y.a;
    return {q0, q1, q2};
  }
  cplx d0() const { return a; }
  cplx d1() const { return b; }
  cplx d2() const { return 2.0 * c; }
};

Jet jet_F(double w0, double alpha) {
  Jet one{1.0, 0.0, 0.0}, w{w0, 1.0, 0.0};
  return one - cplx(alpha) * (one / (one - w));
}

Jet jet_F01(double w0, double alpha, std::size_t N) {
  Jet one{1.0, 0.0, 0.0}, w{w0, 1.0, 0.0};
  Jet r = w / (one - w);
  Jet om = one - w;
  return cplx(-1.0) * (r * r * jet_F(w0, alpha)) - cplx(2.0 * alpha / static_cast<double>(N)) * (w / (om * om * om));
}

LaplaceInput laplace_input(const std::array<double, 5>& P, const Jet& G, double alpha) {
  const cplx i(0.0, 1.0);
  LaplaceInput in;
  in.V0 = -P[0];
  in.V2 = alpha * alpha * P[2];
  in.V3 = i * alpha * alpha * alpha * P[3];
  in.V4 = -alpha * alpha * alpha * alpha * P[4];
  in.G0 = G.d0();
  in.G1 = i * alpha * G.d1();
  in.G2 = -alpha * alpha * G.d2();
  return in;
}

double log_prefactor(const MeanFieldModel& m) {
  const double N = static_cast<double>(m.N);
  return N * m.alpha / 2.0 + 0.5 * std::log(N * m.alpha / (2.0 * pi));
}

}  // namespace

void MeanFieldModel::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("mean-field model: alpha must be positive");
  if (N < 2) throw std::invalid_argument("mean-field model: N must be at least 2");
}

cplx potential_P_increment(double wc, cplx d, double alpha) {
  check_branch(wc + d);
  const double om = 1.0 - wc;
  const cplx u = d / om;
  const double slope = wc / alpha + 1.0 - 1.0 / om;
  if (std::abs(u) < 0.25) {
    // log(1 - u) + u = -sum_{k>=2} u^k / k: summing the series avoids the
    // cancellation that the factor N would otherwise amplify.
    cplx term = u * u, sum = 0.0;
    for (int k = 2; k < 200; ++k) {
      cplx add = term / static_cast<double>(k);
      sum += add;
      if (std::abs(add) <= 1e-18 * std::abs(sum)) break;
      term *= u;
    }
    return d * slope + d * d / (2.0 * alpha) - sum;
  }
  return d * (wc / alpha + 1.0) + d * d / (2.0 * alpha) + std::log(1.0 - u);
}

cplx potential_P(cplx w, double alpha) { return potential_P_increment(0.0, w, alpha); }

cplx potential_V(cplx z, double alpha) { return -potential_P(cplx(0.0, alpha) * z, alpha); }

cplx weight_F(cplx w, double alpha) {
  check_branch(w);
  return 1.0 - alpha / (1.0 - w);
}

cplx weight_F01(cplx w, double alpha, std::size_t N) {
  check_branch(w);
  cplx om = 1.0 - w;
  cplx r = w / om;
  return -r * r * weight_F(w, alpha) - (2.0 * alpha / static_cast<double>(N)) * w / (om * om * om);
}

cplx weight_F01_uncombined(cplx w, double alpha, std::size_t N) {
  check_branch(w);
  cplx om = 1.0 - w;
  cplx r = w / om;
  return -r * r * (weight_F(w, alpha) - 2.0 * alpha / (static_cast<double>(N) * (-w) * om));
}

std::array<double, 5> potential_P_derivatives(double w, double alpha) {
  if (w >= 1.0) throw std::domain_error("potential_P_derivatives: w on the branch cut");
  const double om = 1.0 - w;
  return {potential_P(w, alpha).real(), w / alpha + 1.0 - 1.0 / om, 1.0 / alpha - 1.0 / (om * om),
          -2.0 / (om * om * om), -6.0 / (om * om * om * om)};
}

SaddleData stationary_points(double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("stationary_points: alpha must be positive");
  SaddleData s;
  s.alpha = alpha;
  s.roots = {0.0, 1.0 - alpha};
  if (alpha == 1.0) {
    s.degenerate = true;
    s.P = potential_P_derivatives(0.0, alpha);
    return s;
  }
  s.stable = alpha < 1.0 ? 0 : 1;
  const double w0 = s.roots[*s.stable];
  s.P = potential_P_derivatives(w0, alpha);
  auto in = laplace_input(s.P, jet_F(w0, alpha), alpha);
  const cplx two_v2 = 2.0 * in.V2;
  s.b0 = (in.G0 / std::sqrt(two_v2)).real();
  cplx bracket = 2.0 * in.G2 - 2.0 * in.V3 * in.G1 / in.V2 +
                 (5.0 * in.V3 * in.V3 / (6.0 * in.V2 * in.V2) - in.V4 / (2.0 * in.V2)) * in.G0;
  s.b1 = (bracket / std::pow(two_v2, 1.5)).real();
  return s;
}

cplx laplace_series(const LaplaceInput& in, double N, int terms) {
  if (terms < 1 || terms > 2) throw std::invalid_argument("laplace_series: terms must be 1 or 2");
  if (std::abs(in.V2) == 0.0) throw std::domain_error("laplace_series: degenerate stationary point (V'' = 0)");
  const cplx two_v2 = 2.0 * in.V2;
  const cplx b0 = in.G0 / std::sqrt(two_v2);
  cplx sum = std::tgamma(0.5) * b0 / std::sqrt(N);
  if (terms == 2) {
    cplx bracket = 2.0 * in.G2 - 2.0 * in.V3 * in.G1 / in.V2 +
                   (5.0 * in.V3 * in.V3 / (6.0 * in.V2 * in.V2) - in.V4 / (2.0 * in.V2)) * in.G0;
    cplx b1 = bracket / std::pow(two_v2, 1.5);
    sum += std::tgamma(1.5) * b1 / std::pow(N, 1.5);
  }
  return 2.0 * sum;
}

cplx laplace_expansion(const LaplaceInput& in, double N, int terms) {
  return std::exp(-N * in.V0) * laplace_series(in, N, terms);
}

QuadratureResult mean_field_integral(const MeanFieldModel& m, MeanFieldWeight which, const ContourOptions& opts) {
  m.validate();
  const double alpha = m.alpha;
  const double N = static_cast<double>(m.N);
  const SaddleData saddle = stationary_points(alpha);
  const bool near_one = std::abs(alpha - 1.0) < near_critical;

  QuadratureResult r;
  r.shift = opts.shift.value_or(-saddle.stable_root() / alpha);
  r.rotation = opts.rotation.value_or(near_one ? pi / 6.0 : 0.0);
  if (!(r.rotation >= 0.0 && r.rotation < pi / 4.0))
    throw std::invalid_argument("mean-field contour: rotation must lie in [0, pi/4)");
  const double wc = -alpha * r.shift;
  if (!(wc < 1.0)) throw std::invalid_argument("mean-field contour: shift crosses the branch point");
  if (near_one && r.rotation == 0.0 && m.N > 10000)
    throw std::invalid_argument("mean-field contour: the unrotated line is refused for N > 1e4 near alpha = 1 "
                                "(catastrophic cancellation); use the rotated ray");

  const cplx dir = std::polar(1.0, r.rotation);
  const cplx step = cplx(0.0, alpha) * dir;  // dw/dr
  const double pc = potential_P(wc, alpha).real();
  r.log_scale = N * pc;
  auto log_envelope = [&](double x) { return N * potential_P_increment(wc, step * x, alpha).real(); };
  auto integrand = [&](double x) {
    cplx w = wc + step * x;
    cplx g = which == MeanFieldWeight::Z ? weight_F(w, alpha) : weight_F01(w, alpha, m.N);
    return (std::exp(N * potential_P_increment(wc, step * x, alpha)) * g * dir).real();
  };

  // Characteristic width in w: Gaussian where P'' > 0, cubic at the degenerate point.
  const auto Pd = potential_P_derivatives(wc, alpha);
  double width_w = std::cbrt(6.0 / (N * std::max(std::abs(Pd[3]), 1e-300)));
  if (Pd[2] > 0.0) width_w = std::min(width_w, 1.0 / std::sqrt(N * Pd[2]));
  const double sigma = std::min(width_w / alpha, 1.0);

  const double cutoff = std::log(opts.envelope_cutoff);
  double reach = sigma;
  for (int it = 0; log_envelope(reach) > cutoff; ++it) {
    if (it > 2000) throw std::runtime_error("mean-field contour: integrand does not decay along the contour");
    reach *= 1.25;
  }
  std::size_t n_panels = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(reach / sigma)), 1, 64);
  const double width = reach / static_cast<double>(n_panels);
  std::vector<double> value(n_panels), check(n_panels), error(n_panels);
  using boost::math::quadrature::gauss_kronrod;

  // Adaptive 15-point Kronrod per panel, plus an independent fixed 61-point
  // rule on quartered panels. Their difference is the reported error: the
  // adaptive rule's own estimate is dominated by rounding noise at large N.
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < n_panels; ++k) {
    double a = width * static_cast<double>(k), b = a + width;
    value[k] = gauss_kronrod<double, 15>::integrate(integrand, a, b, opts.max_depth, opts.rel_tol, &error[k]);
    double c = 0.0;
    for (int q = 0; q < 4; ++q)
      c += gauss_kronrod<double, 61>::integrate(integrand, a + q * width / 4, a + (q + 1) * width / 4, 0);
    check[k] = c;
  }
  double total = 0.0, other = 0.0;
  for (std::size_t k = 0; k < n_panels; ++k) {
    total += value[k];
    other += check[k];
  }
  r.panels = n_panels;
  r.scaled_integral = 2.0 * total;
  r.error_estimate = std::abs(total - other) / std::max(std::abs(total), 1e-300);
  if (!std::isfinite(total) || r.error_estimate > std::max(1e-7, 100.0 * opts.rel_tol))
    throw std::runtime_error("mean-field quadrature did not converge: relative error estimate " +
                             std::to_string(r.error_estimate));
  return r;
}

LogPositive quadrature_Z(const MeanFieldModel& m, const ContourOptions& opts) {
  auto q = mean_field_integral(m, MeanFieldWeight::Z, opts);
  if (!(q.scaled_integral > 0.0)) throw std::runtime_error("quadrature_Z: integral is not positive");
  return {log_prefactor(m) + q.log_scale + std::log(q.scaled_integral)};
}

double quadrature_connect(const MeanFieldModel& m, const ContourOptions& opts) {
  auto z = mean_field_integral(m, MeanFieldWeight::Z, opts);
  auto c = mean_field_integral(m, MeanFieldWeight::Connect, opts);
  return c.scaled_integral / z.scaled_integral;
}

double critical_constant() { return std::pow(3.0, 2.0 / 3.0) * std::tgamma(4.0 / 3.0) / std::tgamma(2.0 / 3.0); }

LogPositive asymptotic_Z(const MeanFieldModel& m) {
  m.validate();
  const double a = m.alpha, N = static_cast<double>(m.N);
  if (a < 1.0) return {N * a / 2.0 + 0.5 * std::log(1.0 - a)};
  if (a > 1.0)
    return {N * a / 2.0 + N * potential_P_derivatives(1.0 - a, a)[0] + 1.5 * std::log(a) - std::log(N) -
            2.5 * std::log(a - 1.0)};
  return {std::log(3.0) / 6.0 + std::lgamma(2.0 / 3.0) + N / 2.0 - std::log(N) / 6.0 - 0.5 * std::log(2.0 * pi)};
}

double asymptotic_connect(const MeanFieldModel& m) {
  m.validate();
  const double a = m.alpha, N = static_cast<double>(m.N);
  if (a < 1.0) return a / ((1.0 - a) * N);
  if (a > 1.0) return ((a - 1.0) / a) * ((a - 1.0) / a);
  return critical_constant() * std::pow(N, -2.0 / 3.0);
}

namespace {

cplx laplace_scaled(const MeanFieldModel& m, const Jet& G, double* log_exp) {
  auto s = stationary_points(m.alpha);
  if (s.degenerate) throw std::domain_error("laplace expansion: alpha = 1 is degenerate");
  auto in = laplace_input(s.P, G, m.alpha);
  *log_exp = static_cast<double>(m.N) * s.P[0];
  return laplace_series(in, static_cast<double>(m.N), 2);
}

}  // namespace

LogPositive laplace_Z(const MeanFieldModel& m) {
  m.validate();
  double log_exp = 0.0;
  cplx series = laplace_scaled(m, jet_F(stationary_points(m.alpha).stable_root(), m.alpha), &log_exp);
  return {log_prefactor(m) + log_exp + std::log(series.real())};
}

double laplace_connect(const MeanFieldModel& m) {
  m.validate();
  const double w0 = stationary_points(m.alpha).stable_root();
  double e1 = 0.0, e2 = 0.0;
  cplx z = laplace_scaled(m, jet_F(w0, m.alpha), &e1);
  cplx c = laplace_scaled(m, jet_F01(w0, m.alpha, m.N), &e2);
  return c.real() / z.real();
}

double displayed_supercritical_log_Z(double a, std::size_t N) {
  const double n = static_cast<double>(N);
  return (n + 1.5) * std::log(a) + (a * a + n) / (2.0 * a) - 2.5 * std::log(a - 1.0) - std::log(n);
}

}  // namespace arbor
