#pragma once

// Complementary error function Erfc(x) = (2/sqrt(pi)) * int_x^inf exp(-z^2) dz
// and its scaled form exp(x^2) Erfc(x).
//
// |x| <= 2 : erf from the positive-term series
//            erf(x) = (2/sqrt(pi)) exp(-x^2) sum_n 2^n x^(2n+1) / (2n+1)!!
// x > 2    : Laplace continued fraction for the scaled function, modified Lentz.
// x < 0    : reflection Erfc(x) = 2 - Erfc(-x).

#include <cmath>
#include <limits>
#include <numbers>

namespace ssep {

namespace detail {

inline constexpr double kErfcSeriesLimit = 2.0;

// (2/sqrt(pi)) sum_n 2^n x^(2n+1) / (2n+1)!!, i.e. exp(x^2) erf(x)
inline double scaled_erf_series(double x) {
  const double x2 = x * x;
  double term = x;
  double sum = x;
  for (int n = 1; n < 200; ++n) {
    term *= 2.0 * x2 / (2.0 * n + 1.0);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum * 2.0 / std::sqrt(std::numbers::pi);
}

// exp(x^2) Erfc(x) for x > 0 via
// 1/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
inline double scaled_erfc_fraction(double x) {
  constexpr double tiny = 1e-300;
  double f = x;
  double c = x;
  double d = 0.0;
  for (int k = 1; k < 5000; ++k) {
    const double a = 0.5 * k;
    d = x + a * d;
    if (d == 0.0) d = tiny;
    c = x + a / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 / (std::sqrt(std::numbers::pi) * f);
}

}  // namespace detail

/// exp(x^2) * Erfc(x). Finite for every finite x >= 0; grows like
/// 2 exp(x^2) for negative x.
inline double erfcx(double x) {
  if (std::isnan(x)) return x;
  if (x == std::numeric_limits<double>::infinity()) return 0.0;
  if (x < 0.0) return 2.0 * std::exp(x * x) - erfcx(-x);
  if (x > detail::kErfcSeriesLimit) return detail::scaled_erfc_fraction(x);
  return std::exp(x * x) - detail::scaled_erf_series(x);
}

inline double erfc(double x) {
  if (std::isnan(x)) return x;
  if (x < 0.0) return 2.0 - erfc(-x);
  if (x > 27.3) return 0.0;  // below the smallest subnormal
  if (x > detail::kErfcSeriesLimit) return std::exp(-x * x) * detail::scaled_erfc_fraction(x);
  return 1.0 - std::exp(-x * x) * detail::scaled_erf_series(x);
}

/// exp(a) * Erfc(b) without overflow in the intermediate factors.
inline double exp_times_erfc(double a, double b) {
  if (b > 0.0) return std::exp(a - b * b) * erfcx(b);
  return std::exp(a) * erfc(b);
}

}  // namespace ssep
