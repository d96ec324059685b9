#pragma once

// Deterministic evolution of the expected occupation on the extended lattice
// {0, ..., N+1}:
//   d rho(x)/dt   = 1/2 (rho(x-1) + rho(x+1) - 2 rho(x)),  x = 1..N
//   d rho(0)/dt   = (rho(1) - rho(0)) / 2M
//   d rho(N+1)/dt = (rho(N) - rho(N+1)) / 2M
// and of its ideal-reservoir (Dirichlet) counterpart.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "ssep/model.hpp"
#include "ssep/rng.hpp"
#include "ssep/sticky_walk.hpp"

namespace ssep {

/// Expected occupations rho(0..N+1) at microscopic time t.
struct DensityProfile {
  std::vector<double> rho;
  double t = 0.0;

  int n() const { return static_cast<int>(rho.size()) - 2; }
  double minus() const { return rho.front(); }
  double plus() const { return rho.back(); }

  /// rho(x, 0) = u0(x/N) inside, v_{0,+-} at the two extended sites.
  static DensityProfile from_initial(const InitialCondition& initial, int n) {
    DensityProfile p;
    p.rho.resize(static_cast<std::size_t>(n + 2));
    p.rho.front() = initial.boundary.v_minus;
    p.rho.back() = initial.boundary.v_plus;
    for (int x = 1; x <= n; ++x) p.rho[static_cast<std::size_t>(x)] = initial.u0(static_cast<double>(x) / n);
    return p;
  }

  static DensityProfile constant(int n, double c) { return {std::vector<double>(static_cast<std::size_t>(n + 2), c), 0.0}; }

  static DensityProfile delta(int n, int site) {
    auto p = constant(n, 0.0);
    p.rho.at(static_cast<std::size_t>(site)) = 1.0;
    return p;
  }
};

/// sum_{x=1}^N rho(x) + M (rho(0) + rho(N+1)); conserved by evolve.
inline double mass_functional(const DensityProfile& p, long m) {
  double bulk = 0.0;
  for (std::size_t x = 1; x + 1 < p.rho.size(); ++x) bulk += p.rho[x];
  return bulk + static_cast<double>(m) * (p.rho.front() + p.rho.back());
}

enum class EvolveMethod { automatic, runge_kutta, spectral };

struct EvolveOptions {
  double tol = 1e-8;  // global error per unit of microscopic time
  EvolveMethod method = EvolveMethod::automatic;
  double max_step = 0.25;
  // automatic mode switches to the spectral path above this many site updates
  double max_runge_kutta_work = 5e7;
};

namespace detail {

inline constexpr double kRangeSlack = 1e-7;

inline void check_profile(std::span<const double> rho) {
  for (double v : rho) {
    if (!std::isfinite(v)) throw std::invalid_argument("profile contains non-finite values");
    if (v < -kRangeSlack || v > 1.0 + kRangeSlack) throw std::domain_error("profile value outside [0,1]");
  }
}

// Local RK4 error on the fastest mode (|lambda| <= 2) is ~ (2h)^5/120 per
// step, i.e. 32 h^4 / 120 per unit time.
inline double runge_kutta_step(const EvolveOptions& opts) {
  return std::min(opts.max_step, std::pow(120.0 * opts.tol / 32.0, 0.25));
}

// Right-hand side of the extended system. Dirichlet mode freezes both ends.
struct ChannelField {
  double end_rate;  // 1/(2M), or 0 for fixed boundary values

  void operator()(std::span<const double> r, std::span<double> out) const {
    const std::size_t last = r.size() - 1;
    out[0] = end_rate * (r[1] - r[0]);
    out[last] = end_rate * (r[last - 1] - r[last]);
    for (std::size_t x = 1; x < last; ++x) out[x] = 0.5 * (r[x - 1] + r[x + 1]) - r[x];
  }
};

inline void runge_kutta(std::vector<double>& y, const ChannelField& field, double duration, double h) {
  if (duration <= 0.0) return;
  const auto steps = static_cast<std::size_t>(std::ceil(duration / h));
  const double dt = duration / static_cast<double>(steps);
  const std::size_t n = y.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (std::size_t s = 0; s < steps; ++s) {
    field(y, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
    field(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
    field(tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + dt * k3[i];
    field(tmp, k4);
    for (std::size_t i = 0; i < n; ++i) y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
}

// The generator is reversible for the weights (M, 1, ..., 1, M); conjugating
// by their square roots gives a symmetric tridiagonal matrix.
inline void spectral_reservoir(std::vector<double>& y, long m, double duration) {
  if (duration <= 0.0) return;
  const auto size = static_cast<Eigen::Index>(y.size());
  const double md = static_cast<double>(m);
  const double root_m = std::sqrt(md);
  Eigen::VectorXd diag = Eigen::VectorXd::Constant(size, -1.0);
  Eigen::VectorXd sub = Eigen::VectorXd::Constant(size - 1, 0.5);
  diag(0) = diag(size - 1) = -0.5 / md;
  sub(0) = sub(size - 2) = 0.5 / root_m;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw std::runtime_error("tridiagonal eigensolver failed");

  Eigen::VectorXd weight = Eigen::VectorXd::Ones(size);
  weight(0) = weight(size - 1) = root_m;
  Eigen::VectorXd z(size);
  for (Eigen::Index i = 0; i < size; ++i) z(i) = weight(i) * y[static_cast<std::size_t>(i)];
  const auto& v = solver.eigenvectors();
  Eigen::VectorXd coeff = v.transpose() * z;
  for (Eigen::Index k = 0; k < size; ++k) coeff(k) *= std::exp(std::min(0.0, solver.eigenvalues()(k)) * duration);
  z = v * coeff;
  for (Eigen::Index i = 0; i < size; ++i) y[static_cast<std::size_t>(i)] = z(i) / weight(i);
}

// Dirichlet problem: subtract the discrete harmonic line, expand the rest in
// the sine eigenvectors sin(k pi x / (N+1)) with eigenvalues cos(k pi/(N+1)) - 1.
inline void spectral_dirichlet(std::vector<double>& y, double duration) {
  if (duration <= 0.0) return;
  const int n = static_cast<int>(y.size()) - 2;
  const double lo = y.front(), hi = y.back();
  const double span = n + 1.0;
  auto line = [&](int x) { return lo + (hi - lo) * x / span; };
  std::vector<double> w(static_cast<std::size_t>(n + 1), 0.0);
  for (int x = 1; x <= n; ++x) w[static_cast<std::size_t>(x)] = y[static_cast<std::size_t>(x)] - line(x);
  std::vector<double> coeff(static_cast<std::size_t>(n + 1), 0.0);
  for (int k = 1; k <= n; ++k) {
    double c = 0.0;
    for (int x = 1; x <= n; ++x) c += w[static_cast<std::size_t>(x)] * std::sin(k * std::numbers::pi * x / span);
    const double lambda = std::cos(k * std::numbers::pi / span) - 1.0;
    coeff[static_cast<std::size_t>(k)] = 2.0 / span * c * std::exp(lambda * duration);
  }
  for (int x = 1; x <= n; ++x) {
    double s = line(x);
    for (int k = 1; k <= n; ++k) s += coeff[static_cast<std::size_t>(k)] * std::sin(k * std::numbers::pi * x / span);
    y[static_cast<std::size_t>(x)] = s;
  }
}

inline bool use_spectral(const EvolveOptions& opts, std::size_t sites, double duration) {
  switch (opts.method) {
    case EvolveMethod::runge_kutta: return false;
    case EvolveMethod::spectral: return true;
    case EvolveMethod::automatic: break;
  }
  const double steps = std::ceil(duration / runge_kutta_step(opts));
  return steps * static_cast<double>(sites) > opts.max_runge_kutta_work;
}

}  // namespace detail

/// Advances a profile by dt_total units of microscopic time with the finite
/// reservoir dynamics.
inline DensityProfile evolve(const DensityProfile& profile, const SystemParams& params, double dt_total,
                             const EvolveOptions& opts = {}) {
  if (static_cast<int>(profile.rho.size()) != params.extended_size())
    throw std::invalid_argument("profile length must be N+2");
  if (!(dt_total >= 0.0) || !std::isfinite(dt_total)) throw std::invalid_argument("evolution time must be finite and >= 0");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("tolerance must be > 0");
  detail::check_profile(profile.rho);
  DensityProfile out = profile;
  if (detail::use_spectral(opts, out.rho.size(), dt_total))
    detail::spectral_reservoir(out.rho, params.m(), dt_total);
  else
    detail::runge_kutta(out.rho, {0.5 / static_cast<double>(params.m())}, dt_total, detail::runge_kutta_step(opts));
  out.t = profile.t + dt_total;
  detail::check_profile(out.rho);
  return out;
}

struct EvolveReport {
  DensityProfile profile;
  double error_estimate = 0.0;  // Richardson estimate, sup norm
};

/// Runge-Kutta evolution verified by step halving.
inline EvolveReport evolve_checked(const DensityProfile& profile, const SystemParams& params, double dt_total,
                                   EvolveOptions opts = {}) {
  opts.method = EvolveMethod::runge_kutta;
  EvolveReport report{evolve(profile, params, dt_total, opts), 0.0};
  opts.max_step = 0.5 * detail::runge_kutta_step(opts);
  const auto fine = evolve(profile, params, dt_total, opts);
  for (std::size_t i = 0; i < fine.rho.size(); ++i)
    report.error_estimate = std::max(report.error_estimate, std::abs(fine.rho[i] - report.profile.rho[i]) / 15.0);
  report.profile = fine;
  return report;
}

/// Ideal-reservoir evolution: the bulk follows the same discrete Laplacian
/// with rho(0) = v_minus and rho(N+1) = v_plus held fixed. Input is the bulk
/// profile over 1..N; the result includes the two fixed end values.
inline DensityProfile evolve_dirichlet(std::span<const double> bulk, const BoundaryDensities& boundary,
                                       double dt_total, const EvolveOptions& opts = {}) {
  if (bulk.size() < 1) throw std::invalid_argument("bulk profile is empty");
  if (!(dt_total >= 0.0) || !std::isfinite(dt_total)) throw std::invalid_argument("evolution time must be finite and >= 0");
  boundary.validate();
  detail::check_profile(bulk);
  DensityProfile out;
  out.rho.reserve(bulk.size() + 2);
  out.rho.push_back(boundary.v_minus);
  out.rho.insert(out.rho.end(), bulk.begin(), bulk.end());
  out.rho.push_back(boundary.v_plus);
  if (detail::use_spectral(opts, out.rho.size(), dt_total))
    detail::spectral_dirichlet(out.rho, dt_total);
  else
    detail::runge_kutta(out.rho, {0.0}, dt_total, detail::runge_kutta_step(opts));
  out.t = dt_total;
  detail::check_profile(out.rho);
  return out;
}

struct DualityResidual {
  double residual = 0.0;  // |ODE - MC|
  double std_error = 0.0; // standard error of the MC side
};

/// Compares evolve(profile)(x) after time t with the dual-walk estimate
/// E_x[rho(X(t), 0)] over K sticky walks.
inline DualityResidual duality_residual(const DensityProfile& profile, const SystemParams& params, int x, double t,
                                        std::size_t replicates, RngStream& rng, const EvolveOptions& opts = {}) {
  if (replicates < 2) throw std::invalid_argument("need at least 2 replicates");
  const StickyLattice lattice(params);
  if (!lattice.contains(x)) throw std::out_of_range("site outside {0, ..., N+1}");
  const double ode = evolve(profile, params, t, opts).rho[static_cast<std::size_t>(x)];
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t k = 0; k < replicates; ++k) {
    const double v = profile.rho[static_cast<std::size_t>(simulate_sticky(x, t, lattice, rng))];
    sum += v;
    sum_sq += v * v;
  }
  const double kk = static_cast<double>(replicates);
  const double mean = sum / kk;
  const double var = std::max(0.0, (sum_sq - kk * mean * mean) / (kk - 1.0));
  return {std::abs(ode - mean), std::sqrt(var / kk)};
}

/// Partial-mass site for the flux identity: x = floor(l N), at least 1.
inline int flux_site(double l, int n) { return std::clamp(static_cast<int>(std::floor(l * n)), 1, n); }

/// Checks d/dt sum_{y<=x} rho(y) = 1/2 [rho(x+1) - rho(x)] + 1/2 [rho(0) - rho(1)]
/// with x = floor(l N): the flux is integrated over [t0, t] by composite
/// Simpson on a grid of spacing ~step along the ODE trajectory and compared
/// with the change of the partial mass. Returns the absolute residual.
inline double flux_identity_residual(const DensityProfile& profile, const SystemParams& params, double l, double t0,
                                     double t, double step, const EvolveOptions& opts = {}) {
  if (!(l > 0.0 && l <= 1.0)) throw std::invalid_argument("l must lie in (0, 1]");
  if (!(t0 < t) || t0 < 0.0) throw std::invalid_argument("need 0 <= t0 < t");
  if (!(step > 0.0)) throw std::invalid_argument("quadrature step must be > 0");
  const int x = flux_site(l, params.n());
  auto flux = [x](const DensityProfile& p) {
    const auto& r = p.rho;
    const auto ux = static_cast<std::size_t>(x);
    return 0.5 * (r[ux + 1] - r[ux]) + 0.5 * (r[0] - r[1]);
  };
  auto partial_mass = [x](const DensityProfile& p) {
    double s = 0.0;
    for (int y = 1; y <= x; ++y) s += p.rho[static_cast<std::size_t>(y)];
    return s;
  };

  EvolveOptions rk = opts;
  rk.method = EvolveMethod::runge_kutta;
  DensityProfile current = evolve(profile, params, t0, opts);
  const double start_mass = partial_mass(current);
  auto intervals = static_cast<std::size_t>(std::ceil((t - t0) / step));
  intervals += intervals % 2;  // Simpson needs an even count
  const double h = (t - t0) / static_cast<double>(intervals);
  double integral = flux(current);
  for (std::size_t i = 1; i <= intervals; ++i) {
    current = evolve(current, params, h, rk);
    const double w = (i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    integral += w * flux(current);
  }
  integral *= h / 3.0;
  return std::abs(integral - (partial_mass(current) - start_mass));
}

}  // namespace ssep
