#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <cmath>
#include <concepts>
#include <string>
#include <type_traits>

namespace arbor {

/// Exact rational coefficients (GMP-backed).
using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational, boost::multiprecision::et_off>;

template <class T>
inline constexpr bool is_rational_v = std::is_same_v<T, Rational>;

template <class T>
concept Scalar = std::same_as<T, double> || std::same_as<T, Rational>;

inline double to_double(double x) { return x; }
inline double to_double(const Rational& x) { return x.convert_to<double>(); }

/// Exact conversion: every finite double is a dyadic rational.
template <Scalar S>
S from_double(double x) {
  return S(x);
}

template <Scalar S>
bool is_zero(const S& x) {
  return x == 0;
}

inline std::string to_string(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
inline std::string to_string(const Rational& x) { return x.str(); }

inline Rational make_rational(long num, long den) { return Rational(num) / Rational(den); }

}  // namespace arbor
