#pragma once

// State space, rates and elementary transitions of the exclusion channel
// coupled to two finite reservoirs (marginal chain: channel bits + reservoir
// particle counts).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssep/rng.hpp"

namespace ssep {

/// Raised when a boundary exchange is requested whose rate is zero.
class InvalidTransition : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Channel size N, reservoir exponent alpha and reservoir size M.
class SystemParams {
 public:
  /// M = round(N^(1+alpha)).
  static SystemParams from_alpha(int n, double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("alpha must be > 0");
    check_n(n);
    const double m = std::round(std::pow(static_cast<double>(n), 1.0 + alpha));
    if (m > 4.0e18) throw std::invalid_argument("reservoir size overflows");
    return SystemParams(n, alpha, static_cast<long>(m));
  }

  /// Explicit reservoir size; alpha is recorded as given.
  static SystemParams with_reservoir_size(int n, long m, double alpha) {
    check_n(n);
    if (m < 1) throw std::invalid_argument("reservoir size M must be >= 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
    return SystemParams(n, alpha, m);
  }

  int n() const { return n_; }
  long m() const { return m_; }
  double alpha() const { return alpha_; }
  double epsilon() const { return 1.0 / n_; }
  /// Number of extended sites {0, ..., N+1}.
  int extended_size() const { return n_ + 2; }

  friend bool operator==(const SystemParams&, const SystemParams&) = default;

 private:
  SystemParams(int n, double alpha, long m) : n_(n), m_(m), alpha_(alpha) {}
  static void check_n(int n) {
    if (n < 2) throw std::invalid_argument("channel size N must be >= 2");
  }

  int n_;
  long m_;
  double alpha_;
};

struct BoundaryDensities {
  double v_minus = 0.0;
  double v_plus = 0.0;

  void validate() const {
    auto ok = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!ok(v_minus) || !ok(v_plus)) throw std::invalid_argument("boundary densities must lie in [0,1]");
  }
  friend bool operator==(const BoundaryDensities&, const BoundaryDensities&) = default;
};

/// Macroscopic initial profile u0 on [0,1] plus initial reservoir densities.
struct InitialCondition {
  std::function<double(double)> u0;
  BoundaryDensities boundary;
};

/// How the initial reservoir counts are drawn from v_{0,+-}.
enum class ReservoirInit { binomial, rounded };

/// Channel occupations eta(1..N) (stored 0-based) and reservoir counts.
struct ParticleConfig {
  std::vector<std::uint8_t> eta;
  long n_minus = 0;
  long n_plus = 0;

  int n() const { return static_cast<int>(eta.size()); }
  /// Occupation of channel site x in 1..N.
  int at(int x) const { return eta[static_cast<std::size_t>(x - 1)]; }
  void set(int x, int value) { eta[static_cast<std::size_t>(x - 1)] = static_cast<std::uint8_t>(value); }

  static ParticleConfig empty(int n) { return {std::vector<std::uint8_t>(static_cast<std::size_t>(n), 0), 0, 0}; }
  static ParticleConfig full(int n, long m) { return {std::vector<std::uint8_t>(static_cast<std::size_t>(n), 1), m, m}; }

  friend bool operator==(const ParticleConfig&, const ParticleConfig&) = default;
};

inline void validate(const ParticleConfig& config, const SystemParams& params) {
  if (config.n() != params.n()) throw std::invalid_argument("configuration length differs from N");
  for (auto b : config.eta)
    if (b > 1) throw std::invalid_argument("occupation must be 0 or 1");
  auto in_range = [&](long v) { return v >= 0 && v <= params.m(); };
  if (!in_range(config.n_minus) || !in_range(config.n_plus))
    throw std::invalid_argument("reservoir counts must lie in [0, M]");
}

inline long total_particles(const ParticleConfig& config) {
  long sum = config.n_minus + config.n_plus;
  for (auto b : config.eta) sum += b;
  return sum;
}

// c_N = 1/2 (1 - n+/M) eta(N) + 1/2 (n+/M) (1 - eta(N))
inline double boundary_rate_right(const ParticleConfig& config, const SystemParams& params) {
  const double fill = static_cast<double>(config.n_plus) / static_cast<double>(params.m());
  return config.at(config.n()) ? 0.5 * (1.0 - fill) : 0.5 * fill;
}

inline double boundary_rate_left(const ParticleConfig& config, const SystemParams& params) {
  const double fill = static_cast<double>(config.n_minus) / static_cast<double>(params.m());
  return config.at(1) ? 0.5 * (1.0 - fill) : 0.5 * fill;
}

// In-place transitions used by the simulators.

inline void swap_bond(ParticleConfig& config, int x) {
  if (x < 1 || x >= config.n()) throw std::out_of_range("bond index must lie in 1..N-1");
  auto& e = config.eta;
  std::swap(e[static_cast<std::size_t>(x - 1)], e[static_cast<std::size_t>(x)]);
}

namespace detail {
inline void exchange_with_reservoir(std::uint8_t& site, long& count, long m, const char* side) {
  if (site) {
    if (count >= m) throw InvalidTransition(std::string(side) + " reservoir is full");
    site = 0;
    ++count;
  } else {
    if (count <= 0) throw InvalidTransition(std::string(side) + " reservoir is empty");
    site = 1;
    --count;
  }
}
}  // namespace detail

inline void exchange_right(ParticleConfig& config, long m) {
  detail::exchange_with_reservoir(config.eta.back(), config.n_plus, m, "right");
}

inline void exchange_left(ParticleConfig& config, long m) {
  detail::exchange_with_reservoir(config.eta.front(), config.n_minus, m, "left");
}

inline ParticleConfig apply_bulk_exchange(ParticleConfig config, int x) {
  swap_bond(config, x);
  return config;
}

inline ParticleConfig apply_boundary_exchange_right(ParticleConfig config, const SystemParams& params) {
  exchange_right(config, params.m());
  return config;
}

inline ParticleConfig apply_boundary_exchange_left(ParticleConfig config, const SystemParams& params) {
  exchange_left(config, params.m());
  return config;
}

enum class EventKind { bulk, left, right };

struct Event {
  EventKind kind;
  int bond = 0;  // 1..N-1 for bulk events
  double rate = 0.0;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Events with strictly positive rate. Bonds with equal occupations are
/// null moves and are skipped.
inline std::vector<Event> active_event_list(const ParticleConfig& config, const SystemParams& params) {
  std::vector<Event> events;
  for (int x = 1; x < config.n(); ++x)
    if (config.at(x) != config.at(x + 1)) events.push_back({EventKind::bulk, x, 0.5});
  if (const double r = boundary_rate_left(config, params); r > 0.0) events.push_back({EventKind::left, 0, r});
  if (const double r = boundary_rate_right(config, params); r > 0.0) events.push_back({EventKind::right, 0, r});
  return events;
}

inline void apply_event(ParticleConfig& config, const Event& event, long m) {
  switch (event.kind) {
    case EventKind::bulk: swap_bond(config, event.bond); break;
    case EventKind::left: exchange_left(config, m); break;
    case EventKind::right: exchange_right(config, m); break;
  }
}

/// Relabels x -> N+1-x and swaps the reservoirs.
inline ParticleConfig mirror(ParticleConfig config) {
  std::reverse(config.eta.begin(), config.eta.end());
  std::swap(config.n_minus, config.n_plus);
  return config;
}

/// Product Bernoulli(u0(x/N)) channel; reservoirs Binomial(M, v) or round(M v).
inline ParticleConfig sample_initial(const InitialCondition& initial, const SystemParams& params, RngStream& rng,
                                     ReservoirInit mode = ReservoirInit::binomial) {
  initial.boundary.validate();
  ParticleConfig config = ParticleConfig::empty(params.n());
  for (int x = 1; x <= params.n(); ++x) {
    const double p = initial.u0(static_cast<double>(x) * params.epsilon());
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("initial profile must take values in [0,1]");
    config.set(x, rng.bernoulli(p) ? 1 : 0);
  }
  const long m = params.m();
  if (mode == ReservoirInit::binomial) {
    config.n_minus = rng.binomial(m, initial.boundary.v_minus);
    config.n_plus = rng.binomial(m, initial.boundary.v_plus);
  } else {
    config.n_minus = std::lround(static_cast<double>(m) * initial.boundary.v_minus);
    config.n_plus = std::lround(static_cast<double>(m) * initial.boundary.v_plus);
  }
  return config;
}

}  // namespace ssep
