#pragma once

// Reference implementations used only by the tests. They are written from the
// model definition directly and share no code with the library's dynamics.

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

namespace oracle {

// Full state: channel bits, left count, right count.
struct State {
  std::vector<int> eta;
  long left = 0;
  long right = 0;
  auto operator<=>(const State&) const = default;
};

/// Exact master equation for a tiny system, solved by uniformization.
class MasterEquation {
 public:
  MasterEquation(int n, long m) : n_(n), m_(m) {
    for (std::uint32_t bits = 0; bits < (1u << n); ++bits)
      for (long a = 0; a <= m; ++a)
        for (long b = 0; b <= m; ++b) {
          State s{std::vector<int>(static_cast<std::size_t>(n)), a, b};
          for (int i = 0; i < n; ++i) s.eta[static_cast<std::size_t>(i)] = (bits >> i) & 1u;
          index_[s] = states_.size();
          states_.push_back(s);
        }
    transitions_.resize(states_.size());
    for (std::size_t i = 0; i < states_.size(); ++i) {
      const State& s = states_[i];
      for (int x = 0; x + 1 < n; ++x) {
        State t = s;
        std::swap(t.eta[static_cast<std::size_t>(x)], t.eta[static_cast<std::size_t>(x + 1)]);
        if (t != s) add(i, t, 0.5);
      }
      const double md = static_cast<double>(m);
      // right end
      {
        const int last = s.eta.back();
        State t = s;
        if (last == 0 && s.right > 0) {
          t.eta.back() = 1;
          t.right -= 1;
          add(i, t, 0.5 * s.right / md);
        } else if (last == 1 && s.right < m) {
          t.eta.back() = 0;
          t.right += 1;
          add(i, t, 0.5 * (1.0 - s.right / md));
        }
      }
      {
        const int first = s.eta.front();
        State t = s;
        if (first == 0 && s.left > 0) {
          t.eta.front() = 1;
          t.left -= 1;
          add(i, t, 0.5 * s.left / md);
        } else if (first == 1 && s.left < m) {
          t.eta.front() = 0;
          t.left += 1;
          add(i, t, 0.5 * (1.0 - s.left / md));
        }
      }
    }
  }

  std::size_t size() const { return states_.size(); }
  const State& state(std::size_t i) const { return states_[i]; }
  std::size_t index(const State& s) const { return index_.at(s); }

  /// p(t) = p(0) exp(tL).
  std::vector<double> evolve(std::vector<double> p, double t) const {
    double lambda = 0.0;
    for (const auto& row : transitions_) {
      double out = 0.0;
      for (const auto& [j, r] : row) out += r;
      lambda = std::max(lambda, out);
    }
    lambda *= 1.05;
    std::vector<double> term = p, result(p.size(), 0.0);
    double weight = std::exp(-lambda * t);
    const int kmax = static_cast<int>(lambda * t + 12.0 * std::sqrt(lambda * t + 1.0) + 30.0);
    // Poisson weights can underflow at k=0 for long times; work in logs
    for (int k = 0; k <= kmax; ++k) {
      const double logw = -lambda * t + k * std::log(lambda * t) - std::lgamma(k + 1.0);
      weight = std::exp(logw);
      for (std::size_t i = 0; i < p.size(); ++i) result[i] += weight * term[i];
      std::vector<double> next(p.size(), 0.0);
      for (std::size_t i = 0; i < p.size(); ++i) {
        double out = 0.0;
        for (const auto& [j, r] : transitions_[i]) {
          next[j] += term[i] * r / lambda;
          out += r;
        }
        next[i] += term[i] * (1.0 - out / lambda);
      }
      term.swap(next);
    }
    return result;
  }

  /// Expected occupations 0..N+1 (reservoir fractions at the ends).
  std::vector<double> expected_density(const std::vector<double>& p) const {
    std::vector<double> rho(static_cast<std::size_t>(n_ + 2), 0.0);
    const double md = static_cast<double>(m_);
    for (std::size_t i = 0; i < p.size(); ++i) {
      rho.front() += p[i] * states_[i].left / md;
      rho.back() += p[i] * states_[i].right / md;
      for (int x = 0; x < n_; ++x) rho[static_cast<std::size_t>(x + 1)] += p[i] * states_[i].eta[static_cast<std::size_t>(x)];
    }
    return rho;
  }

  /// Point mass on one state.
  std::vector<double> delta(const State& s) const {
    std::vector<double> p(states_.size(), 0.0);
    p[index(s)] = 1.0;
    return p;
  }

 private:
  void add(std::size_t from, const State& to, double rate) {
    if (rate > 0.0) transitions_[from].push_back({index_.at(to), rate});
  }

  int n_;
  long m_;
  std::vector<State> states_;
  std::map<State, std::size_t> index_;
  std::vector<std::vector<std::pair<std::size_t, double>>> transitions_;
};

/// Null-event (thinned) simulation: proposals at uniform rate, each proposal
/// picks a bond or boundary clock and accepts with rate / bound.
inline State thinned_run(State s, long m, double t, std::mt19937_64& gen) {
  const int n = static_cast<int>(s.eta.size());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double md = static_cast<double>(m);
  const int clocks = (n - 1) + 2;
  const double bound = 0.5 * clocks;
  double clock = 0.0;
  for (;;) {
    clock += -std::log(1.0 - unif(gen)) / bound;
    if (clock > t) return s;
    const int c = static_cast<int>(unif(gen) * clocks);
    const double u = unif(gen) * 0.5;
    if (c < n - 1) {
      std::swap(s.eta[static_cast<std::size_t>(c)], s.eta[static_cast<std::size_t>(c + 1)]);
    } else if (c == n - 1) {
      int& site = s.eta.front();
      const double rate = site ? 0.5 * (1.0 - s.left / md) : 0.5 * s.left / md;
      if (u < rate) {
        s.left += site ? 1 : -1;
        site = 1 - site;
      }
    } else {
      int& site = s.eta.back();
      const double rate = site ? 0.5 * (1.0 - s.right / md) : 0.5 * s.right / md;
      if (u < rate) {
        s.right += site ? 1 : -1;
        site = 1 - site;
      }
    }
  }
}

/// Channel coupled to ideal reservoirs: each end site is refreshed at rate
/// 1/2 to Bernoulli(v). Returns the channel after time t.
inline std::vector<int> ideal_reservoir_run(std::vector<int> eta, double v_minus, double v_plus, double t,
                                            std::mt19937_64& gen) {
  const int n = static_cast<int>(eta.size());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int clocks = (n - 1) + 2;
  const double rate = 0.5 * clocks;
  double clock = 0.0;
  for (;;) {
    clock += -std::log(1.0 - unif(gen)) / rate;
    if (clock > t) return eta;
    const int c = static_cast<int>(unif(gen) * clocks);
    if (c < n - 1) std::swap(eta[static_cast<std::size_t>(c)], eta[static_cast<std::size_t>(c + 1)]);
    else if (c == n - 1) eta.front() = unif(gen) < v_minus;
    else eta.back() = unif(gen) < v_plus;
  }
}

/// Crank-Nicolson solution of u_t = u_rr / 2 on [0,1] with fixed ends, with
/// Rannacher start-up (the first two steps replaced by four implicit Euler
/// half steps) so that discontinuous data do not leave oscillations.
template <class F>
std::vector<double> crank_nicolson(F u0, double v_minus, double v_plus, double t, int cells, int steps) {
  const double h = 1.0 / cells;
  std::vector<double> u(static_cast<std::size_t>(cells + 1));
  // two-point sampling keeps a jump that falls on a node at its mean value
  for (int i = 0; i <= cells; ++i) u[static_cast<std::size_t>(i)] = 0.5 * (u0(i * h - 0.25 * h) + u0(i * h + 0.25 * h));
  u.front() = v_minus;
  u.back() = v_plus;
  const int m = cells - 1;
  auto theta_step = [&](double dt, double theta) {
    const double lam = 0.5 * dt / (h * h);
    std::vector<double> rhs(static_cast<std::size_t>(m)), a(static_cast<std::size_t>(m), -theta * lam),
        b(static_cast<std::size_t>(m), 1.0 + 2.0 * theta * lam), c(static_cast<std::size_t>(m), -theta * lam);
    for (int i = 1; i <= m; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      rhs[ui - 1] = u[ui] + (1.0 - theta) * lam * (u[ui - 1] - 2 * u[ui] + u[ui + 1]);
    }
    rhs.front() += theta * lam * v_minus;
    rhs.back() += theta * lam * v_plus;
    // Thomas algorithm
    for (int i = 1; i < m; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const double w = a[ui] / b[ui - 1];
      b[ui] -= w * c[ui - 1];
      rhs[ui] -= w * rhs[ui - 1];
    }
    std::vector<double> x(static_cast<std::size_t>(m));
    x.back() = rhs.back() / b.back();
    for (int i = m - 2; i >= 0; --i) {
      const auto ui = static_cast<std::size_t>(i);
      x[ui] = (rhs[ui] - c[ui] * x[ui + 1]) / b[ui];
    }
    for (int i = 1; i <= m; ++i) u[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i - 1)];
  };
  const double dt = t / steps;
  for (int s = 0; s < 4; ++s) theta_step(0.5 * dt, 1.0);
  for (int s = 2; s < steps; ++s) theta_step(dt, 0.5);
  return u;
}

}  // namespace oracle
