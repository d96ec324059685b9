#include <gtest/gtest.h>

#include <cmath>

#include "ssep/model.hpp"

using namespace ssep;

TEST(SystemParams, ReservoirSizeIsRoundedPower) {
  EXPECT_EQ(SystemParams::from_alpha(20, 0.5).m(), 89);
  EXPECT_EQ(SystemParams::from_alpha(20, 1.0).m(), 400);
  EXPECT_EQ(SystemParams::from_alpha(10, 0.5).m(), 32);
  EXPECT_DOUBLE_EQ(SystemParams::from_alpha(20, 0.5).epsilon(), 0.05);
  EXPECT_EQ(SystemParams::from_alpha(7, 0.5).extended_size(), 9);
}

TEST(SystemParams, RejectsInvalidInput) {
  EXPECT_THROW(SystemParams::from_alpha(1, 0.5), std::invalid_argument);
  EXPECT_THROW(SystemParams::from_alpha(10, 0.0), std::invalid_argument);
  EXPECT_THROW(SystemParams::from_alpha(10, -1.0), std::invalid_argument);
  EXPECT_THROW(SystemParams::with_reservoir_size(5, 0, 0.5), std::invalid_argument);
}

TEST(BoundaryDensities, Validation) {
  EXPECT_NO_THROW((BoundaryDensities{0.0, 1.0}.validate()));
  EXPECT_THROW((BoundaryDensities{-0.1, 0.5}.validate()), std::invalid_argument);
  EXPECT_THROW((BoundaryDensities{0.5, 1.5}.validate()), std::invalid_argument);
}

TEST(BoundaryRates, MatchDefinition) {
  const auto p = SystemParams::with_reservoir_size(4, 10, 0.5);
  auto c = ParticleConfig::empty(4);
  c.n_plus = 3;
  c.n_minus = 7;
  // empty end site: particle enters at rate n/(2M)
  EXPECT_DOUBLE_EQ(boundary_rate_right(c, p), 0.5 * 0.3);
  EXPECT_DOUBLE_EQ(boundary_rate_left(c, p), 0.5 * 0.7);
  c.set(4, 1);
  c.set(1, 1);
  // occupied end site: particle leaves at rate (1 - n/M)/2
  EXPECT_DOUBLE_EQ(boundary_rate_right(c, p), 0.5 * 0.7);
  EXPECT_DOUBLE_EQ(boundary_rate_left(c, p), 0.5 * 0.3);
}

TEST(Exchanges, ConserveParticles) {
  const auto p = SystemParams::with_reservoir_size(3, 5, 0.5);
  ParticleConfig c{{1, 0, 0}, 2, 4};
  const long before = total_particles(c);
  auto d = apply_boundary_exchange_right(c, p);
  EXPECT_EQ(d.at(3), 1);
  EXPECT_EQ(d.n_plus, 3);
  EXPECT_EQ(total_particles(d), before);
  d = apply_boundary_exchange_left(d, p);
  EXPECT_EQ(d.at(1), 0);
  EXPECT_EQ(d.n_minus, 3);
  EXPECT_EQ(total_particles(d), before);
  d = apply_bulk_exchange(d, 2);
  EXPECT_EQ(d.eta, (std::vector<std::uint8_t>{0, 1, 0}));
  EXPECT_EQ(total_particles(d), before);
}

TEST(Exchanges, ImpossibleMovesThrow) {
  const auto p = SystemParams::with_reservoir_size(3, 5, 0.5);
  ParticleConfig empty_reservoir{{0, 0, 0}, 0, 0};
  EXPECT_THROW(apply_boundary_exchange_right(empty_reservoir, p), InvalidTransition);
  EXPECT_THROW(apply_boundary_exchange_left(empty_reservoir, p), InvalidTransition);
  ParticleConfig full_reservoir{{1, 1, 1}, 5, 5};
  EXPECT_THROW(apply_boundary_exchange_right(full_reservoir, p), InvalidTransition);
  EXPECT_THROW(apply_boundary_exchange_left(full_reservoir, p), InvalidTransition);
  EXPECT_THROW(apply_bulk_exchange(full_reservoir, 0), std::out_of_range);
  EXPECT_THROW(apply_bulk_exchange(full_reservoir, 3), std::out_of_range);
}

TEST(Events, NullBondsAreSkipped) {
  const auto p = SystemParams::with_reservoir_size(5, 4, 0.5);
  ParticleConfig c{{1, 1, 0, 0, 1}, 0, 4};
  const auto events = active_event_list(c, p);
  // bonds (2,3) and (4,5) are discrepant; left rate (1-0)/2, right rate 0
  ASSERT_EQ(events.size(), 3u);
  EXPECT_EQ(events[0], (Event{EventKind::bulk, 2, 0.5}));
  EXPECT_EQ(events[1], (Event{EventKind::bulk, 4, 0.5}));
  EXPECT_EQ(events[2].kind, EventKind::left);
  EXPECT_DOUBLE_EQ(events[2].rate, 0.5);
}

TEST(Events, EveryActiveEventConservesAndStaysValid) {
  const auto p = SystemParams::with_reservoir_size(6, 3, 0.5);
  RngStream rng(3, 0);
  for (int trial = 0; trial < 300; ++trial) {
    ParticleConfig c = ParticleConfig::empty(6);
    for (int x = 1; x <= 6; ++x) c.set(x, rng.bernoulli(0.5));
    c.n_minus = static_cast<long>(rng.below(4));
    c.n_plus = static_cast<long>(rng.below(4));
    for (const auto& e : active_event_list(c, p)) {
      auto d = c;
      apply_event(d, e, p.m());
      EXPECT_EQ(total_particles(d), total_particles(c));
      EXPECT_NO_THROW(validate(d, p));
    }
  }
}

TEST(Mirror, SwapsRolesOfTheEnds) {
  const auto p = SystemParams::with_reservoir_size(5, 7, 0.5);
  RngStream rng(8, 0);
  for (int trial = 0; trial < 200; ++trial) {
    ParticleConfig c = ParticleConfig::empty(5);
    for (int x = 1; x <= 5; ++x) c.set(x, rng.bernoulli(0.5));
    c.n_minus = static_cast<long>(rng.below(8));
    c.n_plus = static_cast<long>(rng.below(8));
    EXPECT_EQ(mirror(mirror(c)), c);
    EXPECT_DOUBLE_EQ(boundary_rate_left(c, p), boundary_rate_right(mirror(c), p));
    for (int x = 1; x < 5; ++x) EXPECT_EQ(mirror(apply_bulk_exchange(c, x)), apply_bulk_exchange(mirror(c), 5 - x));
    if (boundary_rate_right(c, p) > 0) {
      EXPECT_EQ(mirror(apply_boundary_exchange_right(c, p)), apply_boundary_exchange_left(mirror(c), p));
    }
  }
}

TEST(Validate, RejectsBadConfigurations) {
  const auto p = SystemParams::with_reservoir_size(3, 5, 0.5);
  EXPECT_THROW(validate(ParticleConfig{{0, 0}, 0, 0}, p), std::invalid_argument);
  EXPECT_THROW(validate(ParticleConfig{{0, 2, 0}, 0, 0}, p), std::invalid_argument);
  EXPECT_THROW(validate(ParticleConfig{{0, 0, 0}, 6, 0}, p), std::invalid_argument);
  EXPECT_THROW(validate(ParticleConfig{{0, 0, 0}, 0, -1}, p), std::invalid_argument);
}

TEST(SampleInitial, ReservoirModes) {
  const auto p = SystemParams::from_alpha(10, 1.0);
  const InitialCondition init{[](double) { return 1.0; }, {0.25, 1.0}};
  RngStream rng(1, 0);
  const auto rounded = sample_initial(init, p, rng, ReservoirInit::rounded);
  EXPECT_EQ(rounded.n_minus, 25);
  EXPECT_EQ(rounded.n_plus, 100);
  EXPECT_EQ(total_particles(rounded), 135);
  double mean = 0.0;
  for (int k = 0; k < 2000; ++k) mean += static_cast<double>(sample_initial(init, p, rng).n_minus);
  EXPECT_NEAR(mean / 2000, 25.0, 4 * std::sqrt(100 * 0.25 * 0.75 / 2000));
}

TEST(SampleInitial, ProfileOutsideUnitIntervalThrows) {
  const auto p = SystemParams::from_alpha(10, 0.5);
  RngStream rng(1, 0);
  EXPECT_THROW(sample_initial({[](double r) { return 2 * r; }, {0, 0}}, p, rng), std::domain_error);
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  RngStream a(5, 3), b(5, 3), c(5, 4);
  for (int i = 0; i < 10; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_NE(x, c.uniform());
  }
  RngStream e(1, 0);
  EXPECT_EQ(e.binomial(10, 0.0), 0);
  EXPECT_EQ(e.binomial(10, 1.0), 10);
}
