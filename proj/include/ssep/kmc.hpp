#pragma once

// Exact event-driven simulation of the channel/reservoir chain and Monte Carlo
// ensemble estimators built on top of it.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ssep/model.hpp"
#include "ssep/parallel.hpp"
#include "ssep/rng.hpp"

namespace ssep {

/// Rejection-free simulator. Keeps the set of discrepant bonds (eta(x) !=
/// eta(x+1)) up to date so that each event costs O(1).
class KmcSimulator {
 public:
  KmcSimulator(ParticleConfig config, SystemParams params)
      : config_(std::move(config)), params_(params), slot_(static_cast<std::size_t>(params.n()), -1) {
    validate(config_, params_);
    for (int x = 1; x < params_.n(); ++x) refresh_bond(x);
  }

  const ParticleConfig& config() const { return config_; }
  const SystemParams& params() const { return params_; }
  double time() const { return time_; }
  std::size_t discrepant_bonds() const { return bonds_.size(); }

  double total_rate() const {
    return 0.5 * static_cast<double>(bonds_.size()) + boundary_rate_left(config_, params_) +
           boundary_rate_right(config_, params_);
  }

  /// Performs one event and returns its waiting time, or +inf (state
  /// unchanged) when no event has positive rate.
  double step(RngStream& rng) {
    const double total = total_rate();
    if (total <= 0.0) return kInfiniteTime;
    const double dt = rng.exponential(total);
    time_ += dt;
    fire(rng.uniform() * total);
    return dt;
  }

  /// Runs until absolute time t; the state is the last one before the first
  /// jump past t. Relies on memorylessness: the overshooting clock is dropped.
  void advance_to(double t, RngStream& rng) {
    while (time_ < t) {
      const double total = total_rate();
      if (total <= 0.0) break;
      const double dt = rng.exponential(total);
      if (time_ + dt > t) break;
      time_ += dt;
      fire(rng.uniform() * total);
    }
    time_ = std::max(time_, t);
  }

  /// Like advance_to, calling observe(config) after every event.
  template <class Observer>
  void advance_to(double t, RngStream& rng, Observer&& observe) {
    while (time_ < t) {
      const double total = total_rate();
      if (total <= 0.0) break;
      const double dt = rng.exponential(total);
      if (time_ + dt > t) break;
      time_ += dt;
      fire(rng.uniform() * total);
      observe(config_);
    }
    time_ = std::max(time_, t);
  }

 private:
  void fire(double u) {
    const double bulk = 0.5 * static_cast<double>(bonds_.size());
    if (u < bulk) {
      const auto idx = std::min(bonds_.size() - 1, static_cast<std::size_t>(u * 2.0));
      const int x = bonds_[idx];
      swap_bond(config_, x);
      // bond x stays discrepant after the swap
      if (x > 1) refresh_bond(x - 1);
      if (x + 1 < params_.n()) refresh_bond(x + 1);
      return;
    }
    u -= bulk;
    const double left = boundary_rate_left(config_, params_);
    if (u < left || boundary_rate_right(config_, params_) <= 0.0) {
      exchange_left(config_, params_.m());
      refresh_bond(1);
    } else {
      exchange_right(config_, params_.m());
      refresh_bond(params_.n() - 1);
    }
  }

  void refresh_bond(int x) {
    const bool active = config_.at(x) != config_.at(x + 1);
    int& slot = slot_[static_cast<std::size_t>(x)];
    if (active && slot < 0) {
      slot = static_cast<int>(bonds_.size());
      bonds_.push_back(x);
    } else if (!active && slot >= 0) {
      const int last = bonds_.back();
      bonds_[static_cast<std::size_t>(slot)] = last;
      slot_[static_cast<std::size_t>(last)] = slot;
      bonds_.pop_back();
      slot = -1;
    }
  }

  ParticleConfig config_;
  SystemParams params_;
  double time_ = 0.0;
  std::vector<int> bonds_;
  std::vector<int> slot_;  // position of bond x in bonds_, or -1
};

/// One exact KMC step on a value. Returns (next config, waiting time); an
/// absorbing state yields (config, +inf).
inline std::pair<ParticleConfig, double> kmc_step(const ParticleConfig& config, const SystemParams& params,
                                                   RngStream& rng) {
  const auto events = active_event_list(config, params);
  double total = 0.0;
  for (const auto& e : events) total += e.rate;
  if (events.empty()) return {config, kInfiniteTime};
  const double dt = rng.exponential(total);
  double u = rng.uniform() * total;
  std::size_t pick = events.size() - 1;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (u < events[i].rate) {
      pick = i;
      break;
    }
    u -= events[i].rate;
  }
  ParticleConfig next = config;
  apply_event(next, events[pick], params.m());
  return {std::move(next), dt};
}

inline ParticleConfig run_until(const ParticleConfig& config, const SystemParams& params, double t, RngStream& rng) {
  if (t < 0.0) throw std::invalid_argument("time horizon must be >= 0");
  KmcSimulator sim(config, params);
  sim.advance_to(t, rng);
  return sim.config();
}

// ---------------------------------------------------------------------------
// Ensemble statistics

struct SitePair {
  int x1 = 1;
  int x2 = 2;
  friend bool operator==(const SitePair&, const SitePair&) = default;
};

struct PairCovariance {
  SitePair pair;
  double cov = 0.0;
  double std_error = 0.0;
};

/// Per-site means over extended sites 0..N+1 (sites 0 and N+1 hold n_-/M and
/// n_+/M), with standard errors sample_std / sqrt(K).
struct EnsembleStats {
  double time = 0.0;
  std::size_t replicates = 0;
  std::vector<double> mean;
  std::vector<double> std_error;
  std::vector<PairCovariance> pairs;
};

struct EnsembleOptions {
  std::uint64_t seed = 1;
  unsigned workers = 0;  // 0: all cores (capped by SSEP_THREADS)
  ReservoirInit reservoir_init = ReservoirInit::binomial;
  std::vector<SitePair> pairs;
};

namespace detail {

// Replicates are grouped in fixed-size blocks; blocks are reduced in index
// order so results do not depend on the worker count.
inline constexpr std::size_t kReplicateBlock = 32;

struct SnapshotAccumulator {
  std::vector<double> sum;
  std::vector<double> sum_sq;
  std::vector<std::array<std::size_t, 4>> pair_counts;  // (a,b) in 00,01,10,11

  SnapshotAccumulator(std::size_t sites, std::size_t pairs)
      : sum(sites, 0.0), sum_sq(sites, 0.0), pair_counts(pairs, {0, 0, 0, 0}) {}

  void add(const ParticleConfig& c, long m, std::span<const SitePair> pairs) {
    const double md = static_cast<double>(m);
    auto put = [&](std::size_t i, double v) {
      sum[i] += v;
      sum_sq[i] += v * v;
    };
    put(0, static_cast<double>(c.n_minus) / md);
    for (int x = 1; x <= c.n(); ++x) put(static_cast<std::size_t>(x), c.at(x));
    put(static_cast<std::size_t>(c.n() + 1), static_cast<double>(c.n_plus) / md);
    for (std::size_t p = 0; p < pairs.size(); ++p)
      ++pair_counts[p][static_cast<std::size_t>(2 * c.at(pairs[p].x1) + c.at(pairs[p].x2))];
  }

  void merge(const SnapshotAccumulator& o) {
    for (std::size_t i = 0; i < sum.size(); ++i) {
      sum[i] += o.sum[i];
      sum_sq[i] += o.sum_sq[i];
    }
    for (std::size_t p = 0; p < pair_counts.size(); ++p)
      for (std::size_t j = 0; j < 4; ++j) pair_counts[p][j] += o.pair_counts[p][j];
  }
};

/// Unbiased sample covariance of two 0/1 variables from their joint counts,
/// with a jackknife standard error (exact: only four distinct replicates).
inline PairCovariance covariance_from_counts(const SitePair& pair, const std::array<std::size_t, 4>& n) {
  const double k = static_cast<double>(n[0] + n[1] + n[2] + n[3]);
  const double sa = static_cast<double>(n[2] + n[3]);
  const double sb = static_cast<double>(n[1] + n[3]);
  const double sab = static_cast<double>(n[3]);
  auto cov = [](double kk, double a, double b, double ab) { return (ab - a * b / kk) / (kk - 1.0); };
  PairCovariance out{pair, cov(k, sa, sb, sab), 0.0};
  if (k < 3.0) return out;
  // leave-one-out values for each of the four replicate kinds
  double loo[4];
  for (int j = 0; j < 4; ++j) {
    const double a = j >> 1, b = j & 1;
    loo[j] = cov(k - 1.0, sa - a, sb - b, sab - a * b);
  }
  double mean = 0.0;
  for (int j = 0; j < 4; ++j) mean += static_cast<double>(n[static_cast<std::size_t>(j)]) * loo[j];
  mean /= k;
  double ss = 0.0;
  for (int j = 0; j < 4; ++j) ss += static_cast<double>(n[static_cast<std::size_t>(j)]) * (loo[j] - mean) * (loo[j] - mean);
  out.std_error = std::sqrt((k - 1.0) / k * ss);
  return out;
}

}  // namespace detail

/// Runs K independent replicates (fresh initial draw and trajectory each,
/// replicate k on stream k) and returns statistics at every requested time.
/// Times are microscopic and must be sorted ascending.
inline std::vector<EnsembleStats> ensemble_snapshots(const InitialCondition& initial, const SystemParams& params,
                                                     std::span<const double> times, std::size_t replicates,
                                                     const EnsembleOptions& options = {}) {
  if (replicates < 2) throw std::invalid_argument("ensemble needs at least 2 replicates");
  if (!std::is_sorted(times.begin(), times.end())) throw std::invalid_argument("sample times must be sorted");
  for (double t : times)
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("sample times must be finite and >= 0");
  for (const auto& p : options.pairs)
    if (p.x1 == p.x2 || p.x1 < 1 || p.x2 < 1 || p.x1 > params.n() || p.x2 > params.n())
      throw std::invalid_argument("covariance pair must be two distinct channel sites");

  const auto sites = static_cast<std::size_t>(params.extended_size());
  const std::size_t blocks = (replicates + detail::kReplicateBlock - 1) / detail::kReplicateBlock;
  std::vector<std::vector<detail::SnapshotAccumulator>> partial(
      blocks, std::vector<detail::SnapshotAccumulator>(times.size(),
                                                       detail::SnapshotAccumulator(sites, options.pairs.size())));

  parallel_for(blocks, worker_count(options.workers), [&](std::size_t b) {
    const std::size_t end = std::min(replicates, (b + 1) * detail::kReplicateBlock);
    for (std::size_t k = b * detail::kReplicateBlock; k < end; ++k) {
      RngStream rng(options.seed, k);
      KmcSimulator sim(sample_initial(initial, params, rng, options.reservoir_init), params);
      for (std::size_t i = 0; i < times.size(); ++i) {
        sim.advance_to(times[i], rng);
        partial[b][i].add(sim.config(), params.m(), options.pairs);
      }
    }
  });

  std::vector<EnsembleStats> out;
  out.reserve(times.size());
  const double k = static_cast<double>(replicates);
  for (std::size_t i = 0; i < times.size(); ++i) {
    detail::SnapshotAccumulator acc(sites, options.pairs.size());
    for (std::size_t b = 0; b < blocks; ++b) acc.merge(partial[b][i]);
    EnsembleStats s;
    s.time = times[i];
    s.replicates = replicates;
    s.mean.resize(sites);
    s.std_error.resize(sites);
    for (std::size_t x = 0; x < sites; ++x) {
      const double mean = acc.sum[x] / k;
      const double var = std::max(0.0, (acc.sum_sq[x] - k * mean * mean) / (k - 1.0));
      s.mean[x] = std::clamp(mean, 0.0, 1.0);
      s.std_error[x] = std::sqrt(var / k);
    }
    for (std::size_t p = 0; p < options.pairs.size(); ++p)
      s.pairs.push_back(detail::covariance_from_counts(options.pairs[p], acc.pair_counts[p]));
    out.push_back(std::move(s));
  }
  return out;
}

inline EnsembleStats ensemble_density(const InitialCondition& initial, const SystemParams& params, double t,
                                      std::size_t replicates, const EnsembleOptions& options = {}) {
  const double times[] = {t};
  return ensemble_snapshots(initial, params, times, replicates, options).front();
}

inline PairCovariance two_point_covariance(const InitialCondition& initial, const SystemParams& params, double t,
                                           SitePair pair, std::size_t replicates, EnsembleOptions options = {}) {
  if (pair.x1 == pair.x2) throw std::invalid_argument("covariance needs two distinct sites");
  options.pairs = {pair};
  return ensemble_density(initial, params, t, replicates, options).pairs.front();
}

// ---------------------------------------------------------------------------
// Reservoir observables

struct ReservoirSample {
  double t = 0.0;
  double minus = 0.0;  // n_-/M
  double plus = 0.0;   // n_+/M
};

/// Reservoir fractions along one trajectory at sorted microscopic times.
inline std::vector<ReservoirSample> reservoir_trajectory(const InitialCondition& initial, const SystemParams& params,
                                                         std::span<const double> sample_times, RngStream& rng,
                                                         ReservoirInit mode = ReservoirInit::binomial) {
  if (!std::is_sorted(sample_times.begin(), sample_times.end()))
    throw std::invalid_argument("sample times must be sorted");
  KmcSimulator sim(sample_initial(initial, params, rng, mode), params);
  const double m = static_cast<double>(params.m());
  std::vector<ReservoirSample> out;
  out.reserve(sample_times.size());
  for (double t : sample_times) {
    sim.advance_to(t, rng);
    out.push_back({t, static_cast<double>(sim.config().n_minus) / m, static_cast<double>(sim.config().n_plus) / m});
  }
  return out;
}

struct ReservoirExcursion {
  double minus = 0.0;  // sup_t |n_-(t) - n_-(0)| / M
  double plus = 0.0;
};

/// Largest reservoir excursion over the whole path up to `horizon`, checked
/// after every event.
inline ReservoirExcursion reservoir_excursion(const InitialCondition& initial, const SystemParams& params,
                                              double horizon, RngStream& rng,
                                              ReservoirInit mode = ReservoirInit::binomial) {
  KmcSimulator sim(sample_initial(initial, params, rng, mode), params);
  const long start_minus = sim.config().n_minus;
  const long start_plus = sim.config().n_plus;
  long dev_minus = 0, dev_plus = 0;
  sim.advance_to(horizon, rng, [&](const ParticleConfig& c) {
    dev_minus = std::max(dev_minus, std::labs(c.n_minus - start_minus));
    dev_plus = std::max(dev_plus, std::labs(c.n_plus - start_plus));
  });
  const double m = static_cast<double>(params.m());
  return {static_cast<double>(dev_minus) / m, static_cast<double>(dev_plus) / m};
}

}  // namespace ssep
