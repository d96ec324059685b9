#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "ssep/kmc.hpp"

using namespace ssep;

namespace {

ParticleConfig to_config(const oracle::State& s) {
  ParticleConfig c = ParticleConfig::empty(static_cast<int>(s.eta.size()));
  for (std::size_t i = 0; i < s.eta.size(); ++i) c.eta[i] = static_cast<std::uint8_t>(s.eta[i]);
  c.n_minus = s.left;
  c.n_plus = s.right;
  return c;
}

std::size_t count_discrepant(const ParticleConfig& c) {
  std::size_t k = 0;
  for (int x = 1; x < c.n(); ++x) k += c.at(x) != c.at(x + 1);
  return k;
}

}  // namespace

TEST(Kmc, BondSetTracksConfiguration) {
  const auto p = SystemParams::with_reservoir_size(12, 6, 0.5);
  RngStream rng(21, 0);
  KmcSimulator sim(ParticleConfig{{1, 1, 1, 0, 0, 1, 0, 1, 0, 0, 1, 1}, 2, 5}, p);
  const long total = total_particles(sim.config());
  for (int i = 0; i < 20000; ++i) {
    ASSERT_TRUE(std::isfinite(sim.step(rng)));
    ASSERT_EQ(sim.discrepant_bonds(), count_discrepant(sim.config()));
    ASSERT_EQ(total_particles(sim.config()), total);
    double expected = 0.0;
    for (const auto& e : active_event_list(sim.config(), p)) expected += e.rate;
    ASSERT_NEAR(sim.total_rate(), expected, 1e-15);
  }
}

TEST(Kmc, AbsorbingStateReturnsInfiniteWait) {
  const auto p = SystemParams::with_reservoir_size(3, 4, 0.5);
  const auto empty = ParticleConfig::empty(3);
  RngStream rng(1, 0);
  KmcSimulator sim(empty, p);
  EXPECT_EQ(sim.total_rate(), 0.0);
  EXPECT_TRUE(std::isinf(sim.step(rng)));
  auto [next, dt] = kmc_step(empty, p, rng);
  EXPECT_TRUE(std::isinf(dt));
  EXPECT_EQ(next, empty);
  const auto full = ParticleConfig::full(3, 4);
  EXPECT_EQ(KmcSimulator(full, p).total_rate(), 0.0);
}

TEST(Kmc, FunctionalStepMatchesEventList) {
  const auto p = SystemParams::with_reservoir_size(4, 3, 0.5);
  RngStream rng(2, 0);
  ParticleConfig c{{1, 0, 1, 0}, 1, 2};
  for (int i = 0; i < 1000; ++i) {
    auto [next, dt] = kmc_step(c, p, rng);
    ASSERT_GT(dt, 0.0);
    ASSERT_EQ(total_particles(next), total_particles(c));
    bool reachable = false;
    for (const auto& e : active_event_list(c, p)) {
      auto d = c;
      apply_event(d, e, p.m());
      reachable = reachable || d == next;
    }
    ASSERT_TRUE(reachable);
    c = next;
  }
}

TEST(Kmc, ZeroHorizonLeavesStateUnchanged) {
  const auto p = SystemParams::with_reservoir_size(4, 3, 0.5);
  RngStream rng(2, 0);
  const ParticleConfig c{{1, 0, 1, 0}, 1, 2};
  EXPECT_EQ(run_until(c, p, 0.0, rng), c);
  EXPECT_THROW(run_until(c, p, -1.0, rng), std::invalid_argument);
}

// Ensemble means against the exact master equation on N=3, M=2.
TEST(Kmc, EnsembleMatchesMasterEquation) {
  const auto p = SystemParams::with_reservoir_size(3, 2, 0.5);
  const oracle::MasterEquation me(3, 2);
  const oracle::State start{{0, 1, 0}, 2, 0};
  const InitialCondition init{[](double r) { return std::abs(r - 2.0 / 3.0) < 1e-9 ? 1.0 : 0.0; }, {1.0, 0.0}};
  const std::vector<double> times{0.5, 2.0, 8.0};
  EnsembleOptions opts;
  opts.seed = 9;
  const auto stats = ensemble_snapshots(init, p, times, 40000, opts);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto exact = me.expected_density(me.evolve(me.delta(start), times[i]));
    for (std::size_t x = 0; x < exact.size(); ++x) {
      const double tol = std::max(4.0 * stats[i].std_error[x], 1e-12);
      EXPECT_NEAR(stats[i].mean[x], exact[x], tol) << "t=" << times[i] << " x=" << x;
    }
  }
}

// Rejection-free and thinned simulations sample the same law.
TEST(Kmc, AgreesWithThinnedSimulation) {
  const auto p = SystemParams::with_reservoir_size(4, 3, 0.5);
  const oracle::State start{{1, 1, 0, 0}, 3, 0};
  const int reps = 40000;
  const double t = 3.0;
  std::mt19937_64 gen(17);
  std::vector<double> thinned(6, 0.0), direct(6, 0.0);
  RngStream rng(17, 0);
  for (int k = 0; k < reps; ++k) {
    const auto a = oracle::thinned_run(start, 3, t, gen);
    const auto b = run_until(to_config(start), p, t, rng);
    thinned[0] += a.left / 3.0;
    direct[0] += b.n_minus / 3.0;
    thinned[5] += a.right / 3.0;
    direct[5] += b.n_plus / 3.0;
    for (int x = 1; x <= 4; ++x) {
      thinned[static_cast<std::size_t>(x)] += a.eta[static_cast<std::size_t>(x - 1)];
      direct[static_cast<std::size_t>(x)] += b.at(x);
    }
  }
  for (std::size_t x = 0; x < 6; ++x) EXPECT_NEAR(direct[x] / reps, thinned[x] / reps, 4.0 * std::sqrt(0.5 / reps));
}

TEST(Ensemble, IndependentOfWorkerCount) {
  const auto p = SystemParams::from_alpha(8, 0.5);
  const InitialCondition init{[](double r) { return r; }, {1.0, 0.0}};
  const std::vector<double> times{1.0, 10.0};
  EnsembleOptions one, four;
  one.workers = 1;
  four.workers = 4;
  one.pairs = four.pairs = {{2, 5}};
  const auto a = ensemble_snapshots(init, p, times, 100, one);
  const auto b = ensemble_snapshots(init, p, times, 100, four);
  for (std::size_t i = 0; i < times.size(); ++i) {
    EXPECT_EQ(a[i].mean, b[i].mean);
    EXPECT_EQ(a[i].std_error, b[i].std_error);
    EXPECT_EQ(a[i].pairs[0].cov, b[i].pairs[0].cov);
  }
}

TEST(Ensemble, ProductMeasureIsStationary) {
  const auto p = SystemParams::from_alpha(6, 0.5);
  const InitialCondition init{[](double) { return 0.3; }, {0.3, 0.3}};
  EnsembleOptions opts;
  opts.seed = 4;
  opts.pairs = {{1, 6}, {3, 4}};
  const auto s = ensemble_density(init, p, 30.0, 20000, opts);
  for (std::size_t x = 0; x < s.mean.size(); ++x) EXPECT_NEAR(s.mean[x], 0.3, 4.0 * s.std_error[x]);
  for (const auto& c : s.pairs) EXPECT_NEAR(c.cov, 0.0, 4.0 * c.std_error);
}

TEST(Ensemble, RejectsBadArguments) {
  const auto p = SystemParams::from_alpha(6, 0.5);
  const InitialCondition init{[](double) { return 0.3; }, {0.3, 0.3}};
  EXPECT_THROW(ensemble_density(init, p, 1.0, 1), std::invalid_argument);
  const std::vector<double> unsorted{2.0, 1.0};
  EXPECT_THROW(ensemble_snapshots(init, p, unsorted, 10), std::invalid_argument);
  EnsembleOptions bad;
  bad.pairs = {{3, 3}};
  EXPECT_THROW(ensemble_density(init, p, 1.0, 10, bad), std::invalid_argument);
}

TEST(Covariance, MatchesDirectFormulaAndJackknife) {
  // (a,b) samples: 00 x3, 01 x1, 10 x2, 11 x4
  const std::array<std::size_t, 4> counts{3, 1, 2, 4};
  std::vector<std::pair<int, int>> samples;
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t r = 0; r < counts[j]; ++r) samples.emplace_back(static_cast<int>(j >> 1), static_cast<int>(j & 1));
  auto cov = [](const std::vector<std::pair<int, int>>& s) {
    double ma = 0, mb = 0;
    for (auto [a, b] : s) ma += a, mb += b;
    ma /= s.size();
    mb /= s.size();
    double c = 0;
    for (auto [a, b] : s) c += (a - ma) * (b - mb);
    return c / (s.size() - 1.0);
  };
  std::vector<double> loo;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto s = samples;
    s.erase(s.begin() + static_cast<long>(i));
    loo.push_back(cov(s));
  }
  double m = 0;
  for (double v : loo) m += v;
  m /= loo.size();
  double ss = 0;
  for (double v : loo) ss += (v - m) * (v - m);
  const double k = static_cast<double>(samples.size());
  const auto c = detail::covariance_from_counts({1, 2}, counts);
  EXPECT_NEAR(c.cov, cov(samples), 1e-15);
  EXPECT_NEAR(c.std_error, std::sqrt((k - 1) / k * ss), 1e-15);
}

TEST(Reservoir, TrajectoryAndExcursion) {
  const auto p = SystemParams::from_alpha(10, 1.0);
  const InitialCondition init{[](double r) { return r; }, {1.0, 0.0}};
  RngStream rng(3, 0);
  const std::vector<double> times{0.0, 10.0, 100.0};
  const auto traj = reservoir_trajectory(init, p, times, rng);
  ASSERT_EQ(traj.size(), 3u);
  EXPECT_DOUBLE_EQ(traj[0].minus, 1.0);
  EXPECT_DOUBLE_EQ(traj[0].plus, 0.0);
  for (const auto& s : traj) {
    EXPECT_GE(s.minus, 0.0);
    EXPECT_LE(s.minus, 1.0);
  }
  RngStream rng2(3, 1);
  const auto none = reservoir_excursion(init, p, 0.0, rng2);
  EXPECT_EQ(none.minus, 0.0);
  const auto some = reservoir_excursion(init, p, 100.0, rng2);
  EXPECT_GT(some.minus, 0.0);
  EXPECT_LE(some.minus, 0.1);
}
