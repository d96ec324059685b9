#pragma once

// Reference solutions for the four scaling regimes.

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ssep/model.hpp"

namespace ssep {

enum class RegimeKind { ideal_hydrodynamic, ideal_stationary, adiabatic, global };

inline std::string_view to_string(RegimeKind k) {
  switch (k) {
    case RegimeKind::ideal_hydrodynamic: return "ideal_hydrodynamic";
    case RegimeKind::ideal_stationary: return "ideal_stationary";
    case RegimeKind::adiabatic: return "adiabatic";
    case RegimeKind::global: return "global";
  }
  return "unknown";
}

/// Time scale N^(2+alpha_prime) together with the regime it selects.
struct LimitRegime {
  RegimeKind kind = RegimeKind::ideal_hydrodynamic;
  double alpha_prime = 0.0;

  /// alpha' = 0 hydrodynamic, 0 < alpha' < alpha stationary, alpha' = alpha
  /// adiabatic, alpha' > alpha global.
  static LimitRegime classify(double alpha_prime, double alpha) {
    if (!(alpha_prime >= 0.0)) throw std::invalid_argument("alpha' must be >= 0");
    if (alpha_prime == 0.0) return {RegimeKind::ideal_hydrodynamic, alpha_prime};
    if (alpha_prime < alpha) return {RegimeKind::ideal_stationary, alpha_prime};
    if (alpha_prime == alpha) return {RegimeKind::adiabatic, alpha_prime};
    return {RegimeKind::global, alpha_prime};
  }

  bool consistent_with(double alpha) const { return classify(alpha_prime, alpha).kind == kind; }
};

/// u(r) = v_- + r (v_+ - v_-).
inline double stationary_profile(const BoundaryDensities& b, double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("r must lie in [0,1]");
  return (b.v_plus - b.v_minus) * r + b.v_minus;
}

/// Solution of u_t = u_rr / 2 on [0,1] with u(0,t) = v_-, u(1,t) = v_+ and
/// initial data u0, as the line L(r) plus a sine series for u0 - L.
class HeatSeries {
 public:
  static constexpr double kTailTolerance = 1e-8;

  HeatSeries(const std::function<double(double)>& u0, BoundaryDensities boundary, int max_terms)
      : boundary_(boundary) {
    if (max_terms < 1) throw std::invalid_argument("need at least one series term");
    boundary_.validate();
    coeff_.assign(static_cast<std::size_t>(max_terms) + 1, 0.0);
    // composite 5-point Gauss-Legendre on 4*terms panels
    static constexpr double node[5] = {-0.906179845938663992797626878299392, -0.538469310105683091036314420700208, 0.0,
                                       0.538469310105683091036314420700208, 0.906179845938663992797626878299392};
    static constexpr double weight[5] = {0.236926885056189087514264040719918, 0.478628670499366468041291514835639,
                                         0.568888888888888888888888888888889, 0.478628670499366468041291514835639,
                                         0.236926885056189087514264040719918};
    const int panels = 4 * max_terms;
    const double h = 1.0 / panels;
    for (int p = 0; p < panels; ++p) {
      const double mid = (p + 0.5) * h;
      for (int j = 0; j < 5; ++j) {
        const double r = mid + 0.5 * h * node[j];
        const double f = (u0(r) - stationary_profile(boundary_, r)) * 0.5 * h * weight[j];
        for (int k = 1; k <= max_terms; ++k) coeff_[static_cast<std::size_t>(k)] += 2.0 * f * std::sin(k * std::numbers::pi * r);
      }
    }
  }

  /// Terms needed so that the dropped tail stays below kTailTolerance.
  static int terms_for(double t, int at_least = 8) {
    const double need = std::sqrt(2.0 * std::log(1.0 / kTailTolerance) / (std::numbers::pi * std::numbers::pi * t));
    return std::max(at_least, static_cast<int>(std::ceil(need)));
  }

  int terms() const { return static_cast<int>(coeff_.size()) - 1; }
  double coefficient(int k) const { return coeff_.at(static_cast<std::size_t>(k)); }

  double operator()(double r, double t) const {
    if (!(t > 0.0)) throw std::invalid_argument("heat solution needs t > 0");
    double u = stationary_profile(boundary_, r);
    for (int k = 1; k <= terms(); ++k) {
      const double decay = std::exp(-k * k * std::numbers::pi * std::numbers::pi * t / 2.0);
      if (decay == 0.0) break;
      u += coeff_[static_cast<std::size_t>(k)] * decay * std::sin(k * std::numbers::pi * r);
    }
    return u;
  }

 private:
  BoundaryDensities boundary_;
  std::vector<double> coeff_;
};

/// u(r, t) for the heat problem; uses max(terms, terms_for(t)) series terms.
inline double heat_solution(const std::function<double(double)>& u0, const BoundaryDensities& boundary, double r,
                            double t, int terms) {
  if (!(t > 0.0)) throw std::invalid_argument("heat solution needs t > 0");
  if (terms < 1) throw std::invalid_argument("need at least one series term");
  return HeatSeries(u0, boundary, std::max(terms, HeatSeries::terms_for(t)))(r, t);
}

/// v_-(t) = (v0- + v0+)/2 + (v0- - v0+)/2 e^{-t}, v_+(t) mirrored.
inline BoundaryDensities adiabatic_boundaries(const BoundaryDensities& initial, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("t must be >= 0");
  const double mean = 0.5 * (initial.v_minus + initial.v_plus);
  const double half_gap = 0.5 * (initial.v_minus - initial.v_plus) * std::exp(-t);
  return {mean + half_gap, mean - half_gap};
}

inline double adiabatic_profile(const BoundaryDensities& initial, double r, double t) {
  return stationary_profile(adiabatic_boundaries(initial, t), r);
}

inline double global_equilibrium(const BoundaryDensities& initial) {
  return 0.5 * (initial.v_minus + initial.v_plus);
}

/// Probability that the simple walk from x hits 0 before N+1.
inline double gambler_ruin_left(int x, int n) {
  if (n < 1 || x < 1 || x > n) throw std::out_of_range("gambler's ruin needs 1 <= x <= N");
  return 1.0 - static_cast<double>(x) / (n + 1.0);
}

}  // namespace ssep
