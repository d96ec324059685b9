#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace ssep {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851, 0.864864423359769072789712788640926,
    0.741531185599394439863864773280788, 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204, 0.104790010322250183839876322541518,
    0.140653259715525918745189590510238, 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {0.129484966168869693270611432679082,
                                                        0.279705391489276667901467771423780,
                                                        0.381830050505118944950369775488975,
                                                        0.417959183673469387755102040816327};

template <class F>
QuadratureResult gauss_kronrod_15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double s = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[j] * s;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * s;
  }
  return {kronrod * half, std::abs((kronrod - gauss) * half)};
}

template <class F>
QuadratureResult adaptive(F& f, double a, double b, double tol, int depth) {
  const auto whole = gauss_kronrod_15(f, a, b);
  if (whole.error <= tol || depth <= 0) return whole;
  const double mid = 0.5 * (a + b);
  const auto left = adaptive(f, a, mid, 0.5 * tol, depth - 1);
  const auto right = adaptive(f, mid, b, 0.5 * tol, depth - 1);
  return {left.value + right.value, left.error + right.error};
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integral of f over the finite interval [a, b],
/// bisecting until the embedded error estimate is below abs_tol.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, double abs_tol = 1e-12, int max_depth = 40) {
  if (!std::isfinite(a) || !std::isfinite(b)) throw std::invalid_argument("integration limits must be finite");
  if (a == b) return {};
  if (a > b) {
    auto r = integrate(f, b, a, abs_tol, max_depth);
    return {-r.value, r.error};
  }
  return detail::adaptive(f, a, b, abs_tol, max_depth);
}

}  // namespace ssep
