#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>

namespace arbor {

using cplx = std::complex<double>;

/// Complete graph K_N with beta_ij = alpha / N.
struct MeanFieldModel {
  double alpha = 1.0;
  std::size_t N = 2;

  void validate() const;
};

/// P(w) = w^2/(2 alpha) + w + log(1 - w), principal branch.
cplx potential_P(cplx w, double alpha);
/// P(wc + d) - P(wc), accurate when d is small relative to 1 - wc.
cplx potential_P_increment(double wc, cplx d, double alpha);
/// V(z) = -P(i alpha z).
cplx potential_V(cplx z, double alpha);
/// F(w) = 1 - alpha / (1 - w).
cplx weight_F(cplx w, double alpha);
/// F01(w) = -(w/(1-w))^2 F(w) - (2 alpha / N) w / (1-w)^3, regular at w = 0.
cplx weight_F01(cplx w, double alpha, std::size_t N);
/// The same function in its uncombined form, singular-looking at w = 0:
/// -(w/(1-w))^2 (F(w) - 2 alpha / (N (-w)(1-w))).
cplx weight_F01_uncombined(cplx w, double alpha, std::size_t N);

/// Derivatives P^(k)(w) for k = 0..4.
std::array<double, 5> potential_P_derivatives(double w, double alpha);

struct SaddleData {
  double alpha = 1.0;
  /// Stationary points of P: 0 and 1 - alpha.
  std::array<double, 2> roots{};
  /// Index into roots of the stable one (P'' > 0); unset at alpha = 1.
  std::optional<int> stable;
  bool degenerate = false;
  /// P^(k)(w0), k = 0..4, at the stable root (at 0 when degenerate).
  std::array<double, 5> P{};
  /// Laplace coefficients for the Z integral in the z-variable.
  double b0 = 0.0;
  double b1 = 0.0;

  double stable_root() const { return stable ? roots[*stable] : 0.0; }
};

SaddleData stationary_points(double alpha);

/// Derivatives at the expansion point t0 of the Laplace integral
/// int e^{-N V(t)} G(t) dt; complex because the contour is shifted.
struct LaplaceInput {
  cplx V0, V2, V3, V4;
  cplx G0, G1, G2;
};

/// 2 sum_{s < terms} Gamma(s + 1/2) b_s / N^{s+1/2}, i.e. the expansion
/// without its e^{-N V(t0)} factor. terms is 1 or 2.
cplx laplace_series(const LaplaceInput& in, double N, int terms);
/// The full expansion 2 e^{-N V(t0)} sum Gamma(s+1/2) b_s / N^{s+1/2}.
cplx laplace_expansion(const LaplaceInput& in, double N, int terms);

/// A positive number stored as log(value) so that e^{N alpha / 2} at large N
/// does not overflow.
struct LogPositive {
  double log_value = 0.0;
  double value() const { return std::exp(log_value); }
};

struct ContourOptions {
  /// Imaginary offset s of the horizontal line R + i s; default -w0 / alpha.
  std::optional<double> shift;
  /// Ray angle theta in [0, pi/4); default pi/6 near alpha = 1, else 0.
  std::optional<double> rotation;
  double rel_tol = 1e-10;
  /// Integration stops where the Gaussian envelope falls below this
  /// fraction of its value at the contour centre.
  double envelope_cutoff = 1e-18;
  unsigned max_depth = 6;
};

struct QuadratureResult {
  /// Integral of e^{N P} G along the contour, divided by e^{N P(w_c)} at the
  /// contour centre w_c = -alpha s.
  double scaled_integral = 0.0;
  /// N * P(w_c).
  double log_scale = 0.0;
  double error_estimate = 0.0;
  double shift = 0.0;
  double rotation = 0.0;
  std::size_t panels = 0;
};

/// Which weight sits in the integrand.
enum class MeanFieldWeight { Z, Connect };

QuadratureResult mean_field_integral(const MeanFieldModel& m, MeanFieldWeight which, const ContourOptions& opts = {});

/// Z_beta of K_N by quadrature of its one-dimensional integral representation.
LogPositive quadrature_Z(const MeanFieldModel& m, const ContourOptions& opts = {});
/// P_beta[0 <-> 1] of K_N as a ratio of two contour integrals.
double quadrature_connect(const MeanFieldModel& m, const ContourOptions& opts = {});

/// Leading-order Z in each regime (alpha < 1, alpha > 1, alpha = 1).
LogPositive asymptotic_Z(const MeanFieldModel& m);
/// alpha / ((1 - alpha) N), ((alpha - 1) / alpha)^2, or c N^{-2/3}.
double asymptotic_connect(const MeanFieldModel& m);
/// c = 3^{2/3} Gamma(4/3) / Gamma(2/3).
double critical_constant();

/// Two-term Laplace approximations of Z and Z[0<->1] (alpha != 1).
LogPositive laplace_Z(const MeanFieldModel& m);
double laplace_connect(const MeanFieldModel& m);

/// Closed-form large-alpha constant a^{N+3/2} e^{(a^2+N)/(2a)} / ((a-1)^{5/2} N), as a log.
double displayed_supercritical_log_Z(double a, std::size_t N);

}  // namespace arbor
