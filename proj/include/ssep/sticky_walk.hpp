#pragma once

// The dual one-particle process: a continuous-time walk on {0, ..., N+1} with
// rate 1/2 to each neighbour inside the channel and escape rate 1/(2M) from
// the two endpoints. Also the reflected-walk time-change construction of the
// same process and the sticky Brownian motion kernel.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "ssep/erfc.hpp"
#include "ssep/model.hpp"
#include "ssep/quadrature.hpp"
#include "ssep/rng.hpp"

namespace ssep {

/// Geometry of the walk: channel size N >= 1 and endpoint stickiness M >= 1.
struct StickyLattice {
  int n = 1;
  long m = 1;

  StickyLattice(int n_, long m_) : n(n_), m(m_) {
    if (n < 1) throw std::invalid_argument("walk lattice needs N >= 1");
    if (m < 1) throw std::invalid_argument("walk stickiness needs M >= 1");
  }
  explicit StickyLattice(const SystemParams& p) : StickyLattice(p.n(), p.m()) {}

  int right_end() const { return n + 1; }
  bool is_boundary(int x) const { return x == 0 || x == n + 1; }
  bool contains(int x) const { return x >= 0 && x <= n + 1; }
};

struct WalkState {
  int position = 0;
  double clock = 0.0;
};

enum class Side { left, right };

struct HittingRecord {
  double tau = 0.0;
  Side side = Side::left;
};

/// Boundary local time of the reflected walk.
struct LocalTimeAccumulator {
  double boundary_time = 0.0;
};

namespace detail {

inline void check_site(const StickyLattice& lattice, int x) {
  if (!lattice.contains(x)) throw std::out_of_range("site outside {0, ..., N+1}");
}

// Neighbour chosen by a walk leaving x; uses one uniform only inside the channel.
inline int next_site(const StickyLattice& lattice, int x, RngStream& rng) {
  if (x == 0) return 1;
  if (x == lattice.n + 1) return lattice.n;
  return rng.uniform() < 0.5 ? x - 1 : x + 1;
}

}  // namespace detail

/// Jump-by-jump sticky walk. Every holding time is a unit exponential scaled
/// by the inverse exit rate (1 inside, 2M at the endpoints).
class StickyWalk {
 public:
  StickyWalk(StickyLattice lattice, int start) : lattice_(lattice), state_{start, 0.0} {
    detail::check_site(lattice_, start);
  }

  const WalkState& state() const { return state_; }
  const StickyLattice& lattice() const { return lattice_; }

  double exit_rate(int x) const { return lattice_.is_boundary(x) ? 0.5 / static_cast<double>(lattice_.m) : 1.0; }

  /// Holding time at the current site followed by the jump. Returns the
  /// holding time.
  double step(RngStream& rng) {
    const double hold = rng.exponential(1.0) / exit_rate(state_.position);
    state_.clock += hold;
    state_.position = detail::next_site(lattice_, state_.position, rng);
    return hold;
  }

  /// Position at time t (>= current clock).
  int position_at(double t, RngStream& rng) {
    for (;;) {
      const double hold = rng.exponential(1.0) / exit_rate(state_.position);
      if (state_.clock + hold > t) {
        state_.clock = t;
        return state_.position;
      }
      state_.clock += hold;
      state_.position = detail::next_site(lattice_, state_.position, rng);
    }
  }

 private:
  StickyLattice lattice_;
  WalkState state_;
};

/// X(t) for one trajectory started at x0.
inline int simulate_sticky(int x0, double t, const StickyLattice& lattice, RngStream& rng) {
  if (t < 0.0) throw std::invalid_argument("time must be >= 0");
  StickyWalk walk(lattice, x0);
  return walk.position_at(t, rng);
}

/// First hitting time of {0, N+1} from an interior site. Before that time
/// the walk is the simple symmetric walk.
inline HittingRecord first_hitting(int x0, const StickyLattice& lattice, RngStream& rng) {
  if (x0 < 1 || x0 > lattice.n) throw std::out_of_range("hitting start must be an interior site");
  StickyWalk walk(lattice, x0);
  while (!lattice.is_boundary(walk.state().position)) walk.step(rng);
  return {walk.state().clock, walk.state().position == 0 ? Side::left : Side::right};
}

/// Sticky walk built from the walk reflected at 0 and N+1: with T(s) the
/// time the reflected walk spends on {0, N+1} up to s,
///   X(s + (2M-1) T(s)) = Y_rf(s).
/// The reflected walk leaves an endpoint at rate 1 (both neighbour moves fold
/// onto the interior). The inverse time change is exact piece by piece:
/// sticky time advances by ds inside the channel and by 2M ds at the ends.
inline int simulate_via_time_change(int x0, double t, const StickyLattice& lattice, RngStream& rng,
                                    LocalTimeAccumulator* local_time = nullptr) {
  detail::check_site(lattice, x0);
  if (t < 0.0) throw std::invalid_argument("time must be >= 0");
  const double stretch = 2.0 * static_cast<double>(lattice.m) - 1.0;
  int y = x0;
  double reflected_clock = 0.0;
  LocalTimeAccumulator acc;
  auto sticky_time = [&] { return reflected_clock + stretch * acc.boundary_time; };
  for (;;) {
    const double hold = rng.exponential(1.0);  // reflected walk exits every site at rate 1
    const bool at_end = lattice.is_boundary(y);
    const double sticky_hold = at_end ? hold * (1.0 + stretch) : hold;
    if (sticky_time() + sticky_hold > t) {
      // stop inside this holding interval: map the remaining sticky time back
      const double remaining = t - sticky_time();
      const double reflected_part = at_end ? remaining / (1.0 + stretch) : remaining;
      reflected_clock += reflected_part;
      if (at_end) acc.boundary_time += reflected_part;
      break;
    }
    reflected_clock += hold;
    if (at_end) acc.boundary_time += hold;
    y = detail::next_site(lattice, y, rng);
  }
  if (local_time) *local_time = acc;
  return y;
}

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Monte Carlo estimate of p_t(x0, y) from K independent walks.
inline Estimate transition_probability_mc(int x0, int y, double t, std::size_t replicates,
                                          const StickyLattice& lattice, RngStream& rng) {
  if (replicates < 2) throw std::invalid_argument("need at least 2 replicates");
  detail::check_site(lattice, x0);
  detail::check_site(lattice, y);
  std::size_t hits = 0;
  for (std::size_t k = 0; k < replicates; ++k)
    if (simulate_sticky(x0, t, lattice, rng) == y) ++hits;
  const double k = static_cast<double>(replicates);
  const double p = static_cast<double>(hits) / k;
  return {p, std::sqrt(p * (1.0 - p) / (k - 1.0))};
}

/// Empirical law of a site-valued sampler over {0, ..., N+1}.
template <class Sampler>
std::vector<double> empirical_law(const StickyLattice& lattice, std::size_t replicates, Sampler&& sample) {
  std::vector<double> law(static_cast<std::size_t>(lattice.n + 2), 0.0);
  for (std::size_t k = 0; k < replicates; ++k) law[static_cast<std::size_t>(sample())] += 1.0;
  for (double& p : law) p /= static_cast<double>(replicates);
  return law;
}

inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("laws on different supports");
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

// ---------------------------------------------------------------------------
// Brownian motion sticky at 1

struct StickyKernelValue {
  double density = 0.0;  // continuous part of the kernel at y
  double atom = 0.0;     // weight of the point mass at y = 1
};

/// Transition kernel of Brownian motion sticky at 1 (sticky coefficient 1/2),
/// with a = |x| + |y - 1|:
///   (2 pi t)^(-1/2) (exp(-(x-y+1)^2/2t) - exp(-a^2/2t))
///   + 1/2 exp(a) exp(t/2) Erfc(sqrt(2t)/2 + a/sqrt(2t))
///   + delta_1(y) exp(|x|) exp(t/2) Erfc(sqrt(2t)/2 + |x|/sqrt(2t)).
inline StickyKernelValue sticky_bm_kernel(double x, double y, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("kernel time must be > 0");
  const double a = std::abs(x) + std::abs(y - 1.0);
  const double s = std::sqrt(2.0 * t);
  const double gauss =
      (std::exp(-(x - y + 1.0) * (x - y + 1.0) / (2.0 * t)) - std::exp(-a * a / (2.0 * t))) /
      std::sqrt(2.0 * std::numbers::pi * t);
  StickyKernelValue v;
  v.density = gauss + 0.5 * exp_times_erfc(a + 0.5 * t, 0.5 * s + a / s);
  v.atom = exp_times_erfc(std::abs(x) + 0.5 * t, 0.5 * s + std::abs(x) / s);
  return v;
}

namespace detail {
// The continuous part is negligible once |y - 1| exceeds |x| + 14 sqrt(t).
inline double kernel_reach(double x, double t) { return std::abs(x) + 14.0 * std::sqrt(t) + 1.0; }
}  // namespace detail

/// Integral of the continuous part over (-inf, upper], split at the sticky
/// point where the kernel has a kink.
inline double sticky_bm_lower_mass(double x, double t, double upper, double tol = 1e-13) {
  auto density = [&](double y) { return sticky_bm_kernel(x, y, t).density; };
  const double lo = 1.0 - detail::kernel_reach(x, t);
  if (upper <= lo) return 0.0;
  if (upper <= 1.0) return integrate(density, lo, upper, tol).value;
  const double hi = std::min(upper, 1.0 + detail::kernel_reach(x, t));
  return integrate(density, lo, 1.0, tol).value + integrate(density, 1.0, hi, tol).value;
}

/// Total mass of the kernel: continuous integral plus atom (1 when normalized).
inline double sticky_bm_total_mass(double x, double t) {
  return sticky_bm_lower_mass(x, t, std::numeric_limits<double>::infinity()) + sticky_bm_kernel(x, 1.0, t).atom;
}

}  // namespace ssep
