#pragma once

// Named verification checks. acceptance_checks() is the full-size exit gate;
// invariant_checks() is a quicker set used by `ssep verify`.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "ssep/expectation.hpp"
#include "ssep/harness.hpp"
#include "ssep/kmc.hpp"
#include "ssep/limits.hpp"
#include "ssep/sticky_walk.hpp"

namespace ssep::verify {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Check {
  std::string name;
  std::function<Outcome()> run;
};

namespace detail {

inline std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

inline double sup_error(const ExperimentResult& r, bool boundary_only = false, int n = 0) {
  double e = 0.0;
  for (const auto& row : r.rows) {
    if (boundary_only && row.site_or_pair != site_label("ode", 0) && row.site_or_pair != site_label("ode", n + 1))
      continue;
    e = std::max(e, row.abs_err);
  }
  return e;
}

inline double sup_error_at(const ExperimentResult& r, double t) {
  double e = 0.0;
  for (const auto& row : r.rows)
    if (row.t == t) e = std::max(e, row.abs_err);
  return e;
}

}  // namespace detail

// -- conservation ------------------------------------------------------------

/// Every KMC event conserves the particle count; every ODE evolution keeps
/// the mass functional to 1e-9 relative.
inline Outcome conservation(std::size_t trajectories, double horizon) {
  struct Case {
    int n;
    double alpha;
    const char* u0;
    BoundaryDensities b;
  };
  const Case cases[] = {{5, 0.5, "const:0.5", {1.0, 0.0}}, {20, 0.5, "linear", {1.0, 0.0}},
                        {12, 1.0, "step:1,0", {0.3, 0.9}}, {30, 0.25, "sine", {0.0, 1.0}}};
  long events = 0;
  for (const auto& c : cases) {
    const auto params = SystemParams::from_alpha(c.n, c.alpha);
    const InitialCondition init{parse_profile(c.u0), c.b};
    for (std::size_t k = 0; k < trajectories; ++k) {
      RngStream rng(77, k);
      KmcSimulator sim(sample_initial(init, params, rng), params);
      const long total = total_particles(sim.config());
      bool ok = true;
      sim.advance_to(horizon, rng, [&](const ParticleConfig& cfg) {
        ++events;
        if (total_particles(cfg) != total) ok = false;
      });
      if (!ok) return {false, detail::fmt("particle count changed (N=%d, trajectory %zu)", c.n, k)};
    }
  }
  double worst = 0.0;
  for (const auto& c : cases) {
    const auto params = SystemParams::from_alpha(c.n, c.alpha);
    const auto p0 = DensityProfile::from_initial({parse_profile(c.u0), c.b}, c.n);
    const double m0 = mass_functional(p0, params.m());
    for (auto method : {EvolveMethod::runge_kutta, EvolveMethod::spectral}) {
      EvolveOptions opts;
      opts.method = method;
      auto p = p0;
      for (double dt : {0.5, 10.0, 200.0}) {
        p = evolve(p, params, dt, opts);
        worst = std::max(worst, std::abs(mass_functional(p, params.m()) - m0) / m0);
      }
    }
  }
  return {worst <= 1e-9, detail::fmt("%ld KMC events conserved exactly; max ODE mass drift %.2e (tol 1e-9)", events, worst)};
}

// -- duality -----------------------------------------------------------------

/// ODE solution vs dual-walk Monte Carlo on N=5, M=11, delta profile at 3.
inline Outcome duality(std::size_t replicates, std::vector<double> times) {
  const auto params = SystemParams::with_reservoir_size(5, 11, 0.5);
  const auto profile = DensityProfile::delta(5, 3);
  RngStream rng(4242, 0);
  int total = 0, within = 0;
  double worst_ratio = 0.0;
  for (double t : times)
    for (int x = 0; x <= 6; ++x) {
      const auto r = duality_residual(profile, params, x, t, replicates, rng);
      ++total;
      const bool ok = r.residual <= 3.0 * r.std_error;
      within += ok;
      if (r.std_error > 0) worst_ratio = std::max(worst_ratio, r.residual / r.std_error);
    }
  const double frac = static_cast<double>(within) / total;
  return {frac >= 0.95, detail::fmt("%d/%d grid points within 3 SE (%.1f%%, need 95%%); worst |diff|/SE = %.2f", within,
                                    total, 100.0 * frac, worst_ratio)};
}

// -- engine agreement ----------------------------------------------------------

inline Outcome kmc_matches_ode(std::size_t replicates) {
  const int n = 20;
  const auto params = SystemParams::from_alpha(n, 0.5);
  const InitialCondition init{parse_profile("linear"), {1.0, 0.0}};
  const double t = static_cast<double>(n) * n;
  EnsembleOptions opts;
  opts.seed = 20240917;
  const auto stats = ensemble_density(init, params, t, replicates, opts);
  const auto ode = evolve(DensityProfile::from_initial(init, n), params, t);
  int bad = 0;
  double worst = 0.0;
  for (const auto& [r, x] : probe_grid(n)) {
    const auto ux = static_cast<std::size_t>(x);
    const double z = std::abs(stats.mean[ux] - ode.rho[ux]) / stats.std_error[ux];
    worst = std::max(worst, z);
    if (!(std::abs(stats.mean[ux] - ode.rho[ux]) <= 3.0 * stats.std_error[ux])) ++bad;
  }
  return {bad == 0, detail::fmt("%d of 11 probes outside 3 SE; worst |KMC-ODE|/SE = %.2f (K=%zu)", bad, worst, replicates)};
}

// -- scaling limits ------------------------------------------------------------

inline ExperimentSpec ode_spec(RegimeKind regime, int n, double alpha, double alpha_prime, const char* u0,
                               BoundaryDensities b, std::vector<double> times) {
  ExperimentSpec s;
  s.regime = regime;
  s.n = n;
  s.alpha = alpha;
  s.alpha_prime = alpha_prime;
  s.u0 = u0;
  s.boundary = b;
  s.times = std::move(times);
  s.engine = Engine::ode;
  return s;
}

inline Outcome hydrodynamic_limit() {
  const std::vector<int> sizes{25, 50, 100};
  const std::vector<double> times{0.05, 0.1};
  std::vector<std::vector<double>> err(times.size());
  for (int n : sizes) {
    const auto res =
        run_experiment(ode_spec(RegimeKind::ideal_hydrodynamic, n, 0.5, 0.0, "sine", {0.0, 0.0}, times));
    for (std::size_t i = 0; i < times.size(); ++i) err[i].push_back(detail::sup_error_at(res, times[i]));
  }
  bool ok = true;
  std::string text;
  for (std::size_t i = 0; i < times.size(); ++i) {
    for (std::size_t j = 0; j < sizes.size(); ++j) {
      ok = ok && err[i][j] <= 0.08;
      if (j) ok = ok && err[i][j] < err[i][j - 1];
    }
    text += detail::fmt("t=%.2f: %.4f/%.4f/%.4f  ", times[i], err[i][0], err[i][1], err[i][2]);
  }
  return {ok, text + "(N=25/50/100, tol 0.08, strictly decreasing)"};
}

inline Outcome stationary_limit() {
  double prev = 1e300;
  bool ok = true;
  std::string text;
  for (int n : {25, 50}) {
    const auto res = run_experiment(ode_spec(RegimeKind::ideal_stationary, n, 0.5, 0.25, "linear", {1.0, 0.0}, {1.0}));
    const double e = detail::sup_error(res);
    ok = ok && e <= 0.05 && e < prev;
    prev = e;
    text += detail::fmt("N=%d: %.4f  ", n, e);
  }
  return {ok, text + "(v=(1,0), tol 0.05, decreasing)"};
}

inline Outcome adiabatic_limit() {
  const std::vector<double> times{0.5, 1.0, 2.0};
  std::vector<double> boundary_err, bulk_err;
  for (int n : {25, 50}) {
    const auto res = run_experiment(ode_spec(RegimeKind::adiabatic, n, 0.5, 0.5, "const:0.5", {1.0, 0.0}, times));
    for (double t : times) {
      double b = 0.0, e = 0.0;
      for (const auto& row : res.rows) {
        if (row.t != t) continue;
        e = std::max(e, row.abs_err);
        if (row.site_or_pair == site_label("ode", 0) || row.site_or_pair == site_label("ode", n + 1))
          b = std::max(b, row.abs_err);
      }
      boundary_err.push_back(b);
      bulk_err.push_back(e);
    }
  }
  bool ok = true;
  std::string text;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const std::size_t j = i + times.size();
    ok = ok && boundary_err[i] <= 0.05 && boundary_err[j] <= 0.05 && bulk_err[i] <= 0.05 && bulk_err[j] <= 0.05;
    ok = ok && boundary_err[j] < boundary_err[i] && bulk_err[j] < bulk_err[i];
    text += detail::fmt("t=%.1f: ends %.4f->%.4f profile %.4f->%.4f  ", times[i], boundary_err[i], boundary_err[j],
                        bulk_err[i], bulk_err[j]);
  }
  return {ok, text + "(N=25->50, tol 0.05, decreasing)"};
}

inline Outcome global_limit() {
  const auto res = run_experiment(ode_spec(RegimeKind::global, 20, 0.25, 0.75, "const:0.5", {1.0, 0.0}, {1.0}));
  const double e = detail::sup_error(res);
  return {e <= 0.05, detail::fmt("max |rho - 1/2| = %.4f over the probe grid (tol 0.05)", e)};
}

// -- reservoir stability -------------------------------------------------------

inline Outcome reservoir_stability(std::size_t replicates) {
  const int n = 20;
  const auto params = SystemParams::from_alpha(n, 1.0);
  const InitialCondition init{parse_profile("linear"), {1.0, 0.0}};
  std::vector<double> dev(replicates);
  parallel_for(replicates, worker_count(), [&](std::size_t k) {
    RngStream rng(31337, k);
    dev[k] = reservoir_excursion(init, params, static_cast<double>(n) * n, rng).minus;
  });
  const auto good = std::count_if(dev.begin(), dev.end(), [](double d) { return d <= 0.05; });
  const double frac = static_cast<double>(good) / static_cast<double>(replicates);
  return {frac >= 0.95, detail::fmt("%ld/%zu replicates with sup|n_-(t)-n_-(0)|/M <= 0.05 (%.1f%%, need 95%%); max %.4f",
                                    static_cast<long>(good), replicates, 100.0 * frac,
                                    *std::max_element(dev.begin(), dev.end()))};
}

// -- propagation of chaos --------------------------------------------------------

inline Outcome propagation_of_chaos(std::size_t replicates, std::vector<int> sizes) {
  std::vector<PairCovariance> covs;
  bool ok = true;
  std::string text;
  for (int n : sizes) {
    ExperimentSpec s;
    s.regime = RegimeKind::ideal_hydrodynamic;
    s.n = n;
    s.alpha = 0.5;
    s.alpha_prime = 0.0;
    s.u0 = "const:0";
    s.boundary = {1.0, 0.0};
    s.times = {1.0};
    s.replicates = replicates;
    s.engine = Engine::kmc;
    s.seed = 99;
    s.pairs = {{1.0 / 3.0, 2.0 / 3.0}};
    const auto row = run_chaos_experiment(s).rows.front();
    const PairCovariance c{pair_sites(s.pairs.front(), n), row.measured, row.se};
    ok = ok && std::abs(c.cov) <= std::max(0.02, 3.0 * c.std_error);
    if (!covs.empty()) {
      const auto& prev = covs.back();
      ok = ok && std::abs(c.cov) <= std::abs(prev.cov) + 3.0 * std::hypot(prev.std_error, c.std_error);
    }
    covs.push_back(c);
    text += detail::fmt("N=%d: %+.5f±%.5f  ", n, c.cov, c.std_error);
  }
  return {ok, text + "(|cov| <= max(0.02, 3 SE), non-increasing within 3 joint SE)"};
}

// -- sticky walk -------------------------------------------------------------------

inline Outcome sticky_walk_structure(std::size_t replicates) {
  bool ok = true;
  std::string text;
  {
    const StickyLattice lattice(9, 100);
    RngStream rng(5, 0);
    double worst = 0.0;
    for (int x : {1, 5, 9}) {
      std::size_t left = 0;
      for (std::size_t k = 0; k < replicates; ++k) left += first_hitting(x, lattice, rng).side == Side::left;
      const double p = static_cast<double>(left) / replicates;
      const double exact = gambler_ruin_left(x, 9);
      const double se = std::sqrt(exact * (1 - exact) / replicates);
      worst = std::max(worst, std::abs(p - exact) / se);
      ok = ok && std::abs(p - exact) <= 3.0 * se;
    }
    text += detail::fmt("ruin worst z=%.2f; ", worst);
  }
  {
    const StickyLattice lattice(5, 11);
    RngStream a(6, 0), b(6, 1);
    const auto direct = empirical_law(lattice, replicates, [&] { return simulate_sticky(3, 50.0, lattice, a); });
    const auto changed = empirical_law(lattice, replicates, [&] { return simulate_via_time_change(3, 50.0, lattice, b); });
    const double tv = total_variation(direct, changed);
    ok = ok && tv <= 0.02;
    text += detail::fmt("time-change TV=%.4f; ", tv);
  }
  {
    const StickyLattice lattice(5, 11);
    RngStream rng(7, 0);
    double worst = 0.0;
    for (int x : {1, 3, 5}) {
      const auto from_end = transition_probability_mc(0, x, 20.0, replicates, lattice, rng);
      const auto to_end = transition_probability_mc(x, 0, 20.0, replicates, lattice, rng);
      const double m = static_cast<double>(lattice.m);
      const double diff = std::abs(m * from_end.value - to_end.value);
      const double se = std::hypot(m * from_end.std_error, to_end.std_error);
      worst = std::max(worst, diff / se);
      ok = ok && diff <= 3.0 * se;
    }
    text += detail::fmt("reversibility worst z=%.2f", worst);
  }
  return {ok, text};
}

// -- sticky Brownian motion kernel ------------------------------------------------------

inline Outcome sticky_kernel() {
  double worst = 0.0;
  for (auto [x, t] : {std::pair{1.0, 1.0}, {0.0, 0.5}, {2.0, 2.0}})
    worst = std::max(worst, std::abs(sticky_bm_total_mass(x, t) - 1.0));
  const double below = sticky_bm_lower_mass(1.0, 1.0, 0.0);
  return {worst <= 1e-6 && below > 0.0,
          detail::fmt("max |mass - 1| = %.2e (tol 1e-6); P_1(B(1) < 0) = %.6g", worst, below)};
}

// -- flux identity -------------------------------------------------------------------------

inline Outcome flux_identity() {
  const auto params = SystemParams::from_alpha(10, 0.5);
  const auto profile = DensityProfile::from_initial({parse_profile("linear"), {1.0, 0.0}}, 10);
  double worst = 0.0;
  for (double l : {0.3, 0.7, 1.0}) worst = std::max(worst, flux_identity_residual(profile, params, l, 1.0, 6.0, 1e-2));
  return {worst <= 1e-6, detail::fmt("max residual %.2e over l in {0.3, 0.7, 1} (tol 1e-6)", worst)};
}

// -- reservoir modulus ------------------------------------------------------------------------

/// Least-squares slope of log(M |rho_-(t) - rho_-(0)|) against log t for a
/// full left reservoir facing an empty channel, 1 << t << N^2.
inline double reservoir_modulus_exponent(int n, double alpha, const std::vector<double>& times) {
  const auto params = SystemParams::from_alpha(n, alpha);
  auto profile = DensityProfile::from_initial({parse_profile("const:0"), {1.0, 0.0}}, n);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double t : times) {
    profile = evolve(profile, params, t - profile.t);
    const double lx = std::log(t), ly = std::log(static_cast<double>(params.m()) * (1.0 - profile.minus()));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double k = static_cast<double>(times.size());
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

inline Outcome reservoir_modulus() {
  const double slope = reservoir_modulus_exponent(200, 0.5, {64, 128, 256, 512, 1024, 2048});
  return {std::abs(slope - 0.5) <= 0.05, detail::fmt("fitted exponent %.4f (expect 1/2 within 0.05)", slope)};
}

// -- quick invariants only used by `ssep verify` -----------------------------------------------

inline Outcome mirror_symmetry(std::size_t samples) {
  const auto params = SystemParams::with_reservoir_size(7, 9, 0.5);
  RngStream rng(11, 0);
  for (std::size_t s = 0; s < samples; ++s) {
    ParticleConfig c = ParticleConfig::empty(7);
    for (int x = 1; x <= 7; ++x) c.set(x, rng.bernoulli(0.5));
    c.n_minus = static_cast<long>(rng.below(10));
    c.n_plus = static_cast<long>(rng.below(10));
    if (boundary_rate_left(c, params) != boundary_rate_right(mirror(c), params)) return {false, "boundary rates differ"};
    for (int x = 1; x < 7; ++x)
      if (mirror(apply_bulk_exchange(c, x)) != apply_bulk_exchange(mirror(c), 7 - x)) return {false, "bulk swap"};
    if (boundary_rate_left(c, params) > 0 &&
        mirror(apply_boundary_exchange_left(c, params)) != apply_boundary_exchange_right(mirror(c), params))
      return {false, "boundary exchange"};
  }
  return {true, detail::fmt("%zu random configurations", samples)};
}

inline Outcome product_measure_stationary(std::size_t replicates) {
  const auto params = SystemParams::from_alpha(10, 0.5);
  const InitialCondition init{parse_profile("const:0.5"), {0.5, 0.5}};
  const std::vector<double> times{5.0, 50.0, 200.0};
  EnsembleOptions opts;
  opts.seed = 3;
  double worst = 0.0;
  for (const auto& s : ensemble_snapshots(init, params, times, replicates, opts))
    for (std::size_t x = 0; x < s.mean.size(); ++x) worst = std::max(worst, std::abs(s.mean[x] - 0.5) / s.std_error[x]);
  return {worst <= 4.0, detail::fmt("worst |mean - 1/2|/SE = %.2f over 36 site-times (tol 4)", worst)};
}

inline Outcome adiabatic_closed_form() {
  const BoundaryDensities b0{0.9, 0.2};
  double worst = 0.0;
  for (double t : {0.1, 0.7, 2.0, 5.0}) {
    const double h = 1e-5;
    const auto up = adiabatic_boundaries(b0, t + h), down = adiabatic_boundaries(b0, t - h), at = adiabatic_boundaries(b0, t);
    const double dvm = (up.v_minus - down.v_minus) / (2 * h);
    worst = std::max(worst, std::abs(dvm - 0.5 * (at.v_plus - at.v_minus)));
  }
  return {worst <= 1e-8, detail::fmt("max |dv_-/dt - (v_+ - v_-)/2| = %.2e", worst)};
}

inline Outcome erfc_accuracy() {
  double worst = 0.0;
  for (double x = -6.0; x <= 27.0; x += 0.01) worst = std::max(worst, std::abs(ssep::erfc(x) - std::erfc(x)));
  return {worst <= 1e-12, detail::fmt("max |erfc - std::erfc| = %.2e on [-6, 27]", worst)};
}

inline std::vector<Check> acceptance_checks() {
  return {
      {"1 conservation of mass", [] { return conservation(40, 400.0); }},
      {"2 duality", [] { return duality(100000, {1.0, 5.0, 10.0, 20.0}); }},
      {"3 KMC vs ODE agreement", [] { return kmc_matches_ode(2000); }},
      {"4 hydrodynamic limit", hydrodynamic_limit},
      {"5 stationary ideal-reservoir limit", stationary_limit},
      {"6 adiabatic limit", adiabatic_limit},
      {"7 global equilibrium", global_limit},
      {"8 reservoir stability", [] { return reservoir_stability(200); }},
      {"9 propagation of chaos", [] { return propagation_of_chaos(5000, {10, 20, 40}); }},
      {"10 sticky-walk structure", [] { return sticky_walk_structure(100000); }},
      {"11 sticky BM kernel", sticky_kernel},
      {"12 flux identity", flux_identity},
  };
}

inline std::vector<Check> invariant_checks() {
  return {
      {"conservation", [] { return conservation(5, 100.0); }},
      {"mirror symmetry", [] { return mirror_symmetry(500); }},
      {"product measure stationarity", [] { return product_measure_stationary(2000); }},
      {"duality", [] { return duality(20000, {2.0, 10.0}); }},
      {"flux identity", flux_identity},
      {"reservoir modulus scaling", reservoir_modulus},
      {"adiabatic closed form", adiabatic_closed_form},
      {"erfc accuracy", erfc_accuracy},
      {"sticky BM kernel", sticky_kernel},
  };
}

/// Runs checks, printing one PASS/FAIL line each; returns the failure count.
inline int run_checks(const std::vector<Check>& checks, std::ostream& os) {
  int failures = 0;
  for (const auto& check : checks) {
    Outcome o;
    try {
      o = check.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    os << (o.pass ? "PASS" : "FAIL") << "  " << check.name << "  " << o.detail << '\n' << std::flush;
  }
  return failures;
}

}  // namespace ssep::verify
